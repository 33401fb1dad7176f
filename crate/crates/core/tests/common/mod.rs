//! An independent model of the small test group, for checking the library's
//! arithmetic against something that shares none of its code: plain i64
//! arithmetic, modular inverses found by scanning, and the affine chord and
//! tangent formulas written out directly.

use siplab_core::ecc::Point;

pub const Q: i64 = 17;
pub const A: i64 = 2;
pub const ORDER: i64 = 19;
const B: i64 = 2;

/// `None` is the point at infinity.
pub type ToyPoint = Option<(i64, i64)>;

/// Every solution of y^2 = x^3 + 2x + 2 over F_17, plus the identity:
/// 19 elements in total, found by trying all (x, y).
pub fn all_points() -> Vec<ToyPoint> {
    let mut points = vec![None];
    for x in 0..Q {
        for y in 0..Q {
            if (y * y - (x * x * x + A * x + B)).rem_euclid(Q) == 0 {
                points.push(Some((x, y)));
            }
        }
    }
    points
}

fn inverse(value: i64) -> i64 {
    let value = value.rem_euclid(Q);
    assert_ne!(value, 0, "zero has no inverse");
    (1..Q).find(|c| (c * value).rem_euclid(Q) == 1).expect("field element")
}

pub fn oracle_add(p1: ToyPoint, p2: ToyPoint) -> ToyPoint {
    let ((x1, y1), (x2, y2)) = match (p1, p2) {
        (None, other) | (other, None) => return other,
        (Some(a), Some(b)) => (a, b),
    };
    if x1 == x2 && (y1 + y2).rem_euclid(Q) == 0 {
        return None;
    }
    let slope = if (x1, y1) == (x2, y2) {
        ((3 * x1 * x1 + A) * inverse(2 * y1)).rem_euclid(Q)
    } else {
        ((y2 - y1) * inverse(x2 - x1)).rem_euclid(Q)
    };
    let x3 = (slope * slope - x1 - x2).rem_euclid(Q);
    let y3 = (slope * (x1 - x3) - y1).rem_euclid(Q);
    Some((x3, y3))
}

/// Multiplication by literal repeated addition, nothing cleverer.
pub fn oracle_mult(k: i64, p: ToyPoint) -> ToyPoint {
    let mut acc = None;
    for _ in 0..k {
        acc = oracle_add(acc, p);
    }
    acc
}

pub fn to_lib(p: ToyPoint) -> Point {
    match p {
        None => Point::Infinity,
        Some((x, y)) => Point::affine(x as u32, y as u32),
    }
}
