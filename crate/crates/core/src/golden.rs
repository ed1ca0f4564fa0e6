//! Published values of h(n), ω(n) and the number of maximum-length sequences
//! for n <= 54.
//!
//! These are literature values, not computed ones. Searches use them only to
//! seed a starting length and size the working arrays; verification compares
//! against them.

/// One row of the published table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnownRow {
    pub n: usize,
    pub p: u32,
    pub h: u32,
    /// ω(n); `None` for n = 1.
    pub omega: Option<u32>,
    /// Number of maximum-length sequences; `None` for n = 1.
    pub n_seq: Option<u32>,
}

const fn row(n: usize, p: u32, h: u32, omega: u32, n_seq: u32) -> KnownRow {
    KnownRow {
        n,
        p,
        h,
        omega: Some(omega),
        n_seq: Some(n_seq),
    }
}

pub const KNOWN: [KnownRow; 54] = [
    KnownRow { n: 1, p: 2, h: 2, omega: None, n_seq: None },
    row(2, 3, 4, 1, 1),
    row(3, 5, 6, 2, 2),
    row(4, 7, 10, 4, 2),
    row(5, 11, 14, 6, 2),
    row(6, 13, 22, 10, 2),
    row(7, 17, 26, 12, 2),
    row(8, 19, 34, 16, 2),
    row(9, 23, 40, 19, 12),
    row(10, 29, 46, 22, 2),
    row(11, 31, 58, 28, 2),
    row(12, 37, 66, 32, 24),
    row(13, 41, 74, 36, 2),
    row(14, 43, 90, 44, 48),
    row(15, 47, 100, 49, 24),
    row(16, 53, 106, 52, 240),
    row(17, 59, 118, 58, 60),
    row(18, 61, 132, 65, 12),
    row(19, 67, 152, 75, 144),
    row(20, 71, 174, 86, 52),
    row(21, 73, 190, 94, 24),
    row(22, 79, 200, 99, 144),
    row(23, 83, 216, 107, 16),
    row(24, 89, 234, 116, 16),
    row(25, 97, 258, 128, 4),
    row(26, 101, 264, 131, 40),
    row(27, 103, 282, 140, 4),
    row(28, 107, 300, 149, 24),
    row(29, 109, 312, 155, 204),
    row(30, 113, 330, 164, 48),
    row(31, 127, 354, 176, 2),
    row(32, 131, 378, 188, 2),
    row(33, 137, 388, 193, 8),
    row(34, 139, 414, 206, 22),
    row(35, 149, 432, 215, 4),
    row(36, 151, 450, 224, 18),
    row(37, 157, 476, 237, 4),
    row(38, 163, 492, 245, 28),
    row(39, 167, 510, 254, 4),
    row(40, 173, 538, 268, 4),
    row(41, 179, 550, 274, 2),
    row(42, 181, 574, 286, 4),
    row(43, 191, 600, 299, 4),
    row(44, 193, 616, 307, 4),
    row(45, 197, 642, 320, 10),
    row(46, 199, 660, 329, 10),
    row(47, 211, 686, 342, 2),
    row(48, 223, 718, 358, 4),
    row(49, 227, 742, 370, 2),
    row(50, 229, 762, 380, 4),
    row(51, 233, 798, 398, 2),
    row(52, 239, 810, 404, 2),
    row(53, 241, 834, 416, 2),
    row(54, 251, 858, 428, 4),
];

pub fn known(n: usize) -> Option<&'static KnownRow> {
    n.checked_sub(1).and_then(|i| KNOWN.get(i))
}

pub fn known_omega(n: usize) -> Option<u32> {
    known(n).and_then(|r| r.omega)
}
