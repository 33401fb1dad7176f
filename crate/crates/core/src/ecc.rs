//! Prime-field elliptic curve arithmetic in affine coordinates.
//!
//! Correctness-first: chord-and-tangent addition with modular inversion via
//! extended Euclid, double-and-add scalar multiplication, and a brute-force
//! discrete-log solver for desk-sized groups. Nothing in this module is
//! constant-time; see the crate docs before pointing it at anything real.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use std::fmt;
use std::sync::OnceLock;

/// Largest group order `ecdlp_brute_force` will scan by default.
pub const DEFAULT_ECDLP_BOUND: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EccError {
    #[error("point {0} is not on the curve")]
    PointNotOnCurve(String),
    #[error("group order {n} exceeds the brute-force bound {bound}")]
    GroupTooLarge { n: String, bound: u64 },
    #[error("no discrete logarithm of the target exists under this base")]
    NoSolution,
    #[error("scalar {0} is outside [0, n-1]")]
    ScalarOutOfRange(String),
    #[error("invalid curve parameters: {0}")]
    InvalidCurve(String),
    #[error("invalid point encoding: {0}")]
    InvalidEncoding(String),
}

/// A point on the curve: the group identity or an affine pair reduced mod q.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Point {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

impl Point {
    pub fn affine(x: impl Into<BigUint>, y: impl Into<BigUint>) -> Self {
        Point::Affine { x: x.into(), y: y.into() }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Infinity => write!(f, "O"),
            Point::Affine { x, y } => write!(f, "({x}, {y})"),
        }
    }
}

/// A scalar reduced into [0, n-1] for the curve it was built against.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar(BigUint);

impl Scalar {
    /// Wraps `value`, rejecting anything outside [0, n-1].
    pub fn new(value: BigUint, curve: &CurveParams) -> Result<Self, EccError> {
        if value >= curve.n {
            return Err(EccError::ScalarOutOfRange(value.to_string()));
        }
        Ok(Scalar(value))
    }

    pub fn from_u64(value: u64, curve: &CurveParams) -> Result<Self, EccError> {
        Self::new(BigUint::from(value), curve)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", self.0)
    }
}

/// Short Weierstrass curve y^2 = x^3 + ax + b over F_q with a distinguished
/// base point of order n.
#[derive(Clone, Debug)]
pub struct CurveParams {
    pub q: BigUint,
    pub a: BigUint,
    pub b: BigUint,
    pub base: Point,
    pub n: BigUint,
    pub profile_name: String,
}

impl CurveParams {
    /// Builds and validates a curve profile.
    pub fn new(
        q: BigUint,
        a: BigUint,
        b: BigUint,
        base: Point,
        n: BigUint,
        profile_name: &str,
    ) -> Result<Self, EccError> {
        let curve = CurveParams { q, a, b, base, n, profile_name: profile_name.to_string() };
        curve.validate()?;
        Ok(curve)
    }

    /// The desk-check profile: y^2 = x^3 + 2x + 2 over F_17, base (5, 1),
    /// group order 19. Small enough that every law can be checked by
    /// exhaustive enumeration, which `toy17()` does once per process.
    pub fn toy17() -> &'static CurveParams {
        static TOY17: OnceLock<CurveParams> = OnceLock::new();
        TOY17.get_or_init(|| {
            let curve = CurveParams::new(
                BigUint::from(17u32),
                BigUint::from(2u32),
                BigUint::from(2u32),
                Point::affine(5u32, 1u32),
                BigUint::from(19u32),
                "TOY-17",
            )
            .expect("TOY-17 parameters are valid");
            curve.validate_exhaustive().expect("TOY-17 passes exhaustive validation");
            curve
        })
    }

    /// The production-shaped profile: NIST P-256, a published prime-order
    /// 256-bit curve. Constants are the standard ones and can be overridden
    /// with a custom profile in the config file.
    pub fn std256() -> &'static CurveParams {
        static STD256: OnceLock<CurveParams> = OnceLock::new();
        STD256.get_or_init(|| {
            let hx = |s: &str| BigUint::parse_bytes(s.as_bytes(), 16).expect("valid hex");
            CurveParams::new(
                hx("ffffffff00000001000000000000000000000000ffffffffffffffffffffffff"),
                hx("ffffffff00000001000000000000000000000000fffffffffffffffffffffffc"),
                hx("5ac635d8aa3a93e7b3ebbd55769886bc651d06b0cc53b0f63bce3c3e27d2604b"),
                Point::Affine {
                    x: hx("6b17d1f2e12c4247f8bce6e563a440f277037d812deb33a0f4a13945d898c296"),
                    y: hx("4fe342e2fe1a7f9b8ee7eb4a7c0f9e162bce33576b315ececbb6406837bf51f5"),
                },
                hx("ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551"),
                "STD-256",
            )
            .expect("STD-256 parameters are valid")
        })
    }

    /// Looks up a built-in profile by name.
    pub fn builtin(name: &str) -> Option<&'static CurveParams> {
        match name.to_ascii_uppercase().as_str() {
            "TOY-17" | "TOY17" => Some(Self::toy17()),
            "STD-256" | "STD256" => Some(Self::std256()),
            _ => None,
        }
    }

    /// Checks the profile invariants: q an odd prime > 3, a and b reduced,
    /// the curve non-singular, the base point on the curve, and n * base = O.
    pub fn validate(&self) -> Result<(), EccError> {
        if self.q <= BigUint::from(3u32) || !is_probable_prime(&self.q) {
            return Err(EccError::InvalidCurve(format!("field modulus {} is not a prime > 3", self.q)));
        }
        if self.a >= self.q || self.b >= self.q {
            return Err(EccError::InvalidCurve("a and b must be reduced mod q".into()));
        }
        // 4a^3 + 27b^2 != 0 mod q, otherwise the curve is singular.
        let four_a3 = BigUint::from(4u32) * self.a.modpow(&BigUint::from(3u32), &self.q) % &self.q;
        let twenty_seven_b2 =
            BigUint::from(27u32) * self.b.modpow(&BigUint::from(2u32), &self.q) % &self.q;
        if ((four_a3 + twenty_seven_b2) % &self.q).is_zero() {
            return Err(EccError::InvalidCurve("discriminant is zero".into()));
        }
        if self.base.is_infinity() || !self.is_on_curve(&self.base) {
            return Err(EccError::InvalidCurve("base point is not on the curve".into()));
        }
        if self.n.is_zero() {
            return Err(EccError::InvalidCurve("group order is zero".into()));
        }
        // n * base = O, computed without the Scalar range check.
        let full_order = self.mult_unchecked(&self.n, &self.base)?;
        if !full_order.is_infinity() {
            return Err(EccError::InvalidCurve("n * base is not the identity".into()));
        }
        Ok(())
    }

    /// Exhaustively enumerates the curve and re-derives the group order.
    /// Only meaningful (and only permitted) for desk-sized fields.
    pub fn validate_exhaustive(&self) -> Result<(), EccError> {
        const ENUMERATION_LIMIT: u64 = 4096;
        let q = self.q.to_u64_digits();
        let q = match (q.len(), self.q.bits()) {
            (0, _) => 0u64,
            (1, _) if q[0] <= ENUMERATION_LIMIT => q[0],
            _ => {
                return Err(EccError::GroupTooLarge {
                    n: self.q.to_string(),
                    bound: ENUMERATION_LIMIT,
                })
            }
        };
        let mut on_curve = std::collections::HashSet::new();
        for x in 0..q {
            for y in 0..q {
                let p = Point::affine(x, y);
                if self.is_on_curve(&p) {
                    on_curve.insert(p);
                }
            }
        }
        // Walk the cyclic subgroup generated by the base point.
        let mut acc = self.base.clone();
        let mut order = 1u64;
        while !acc.is_infinity() {
            if !on_curve.contains(&acc) {
                return Err(EccError::InvalidCurve(format!(
                    "walk left the curve at multiple {order}"
                )));
            }
            acc = self.point_add(&acc, &self.base)?;
            order += 1;
            if order > q * q {
                return Err(EccError::InvalidCurve("subgroup walk failed to terminate".into()));
            }
        }
        if BigUint::from(order) != self.n {
            return Err(EccError::InvalidCurve(format!(
                "base point has order {order}, profile claims {}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn is_on_curve(&self, p: &Point) -> bool {
        match p {
            Point::Infinity => true,
            Point::Affine { x, y } => {
                if x >= &self.q || y >= &self.q {
                    return false;
                }
                let lhs = y.modpow(&BigUint::from(2u32), &self.q);
                let rhs = (x.modpow(&BigUint::from(3u32), &self.q)
                    + &self.a * x
                    + &self.b)
                    % &self.q;
                lhs == rhs
            }
        }
    }

    /// Chord-and-tangent addition. Errors if either input is off the curve.
    pub fn point_add(&self, p1: &Point, p2: &Point) -> Result<Point, EccError> {
        self.require_on_curve(p1)?;
        self.require_on_curve(p2)?;
        let (x1, y1, x2, y2) = match (p1, p2) {
            (Point::Infinity, _) => return Ok(p2.clone()),
            (_, Point::Infinity) => return Ok(p1.clone()),
            (Point::Affine { x: x1, y: y1 }, Point::Affine { x: x2, y: y2 }) => (x1, y1, x2, y2),
        };
        if x1 == x2 && ((y1 + y2) % &self.q).is_zero() {
            // Inverse pair, which includes doubling a point with y = 0.
            return Ok(Point::Infinity);
        }
        let lambda = if x1 == x2 {
            // Tangent: (3x^2 + a) / 2y.
            let num = (BigUint::from(3u32) * x1 * x1 + &self.a) % &self.q;
            let den = (BigUint::from(2u32) * y1) % &self.q;
            self.div_mod(&num, &den)?
        } else {
            // Chord: (y2 - y1) / (x2 - x1).
            let num = self.sub_mod(y2, y1);
            let den = self.sub_mod(x2, x1);
            self.div_mod(&num, &den)?
        };
        let x3 = self.sub_mod(&self.sub_mod(&(&lambda * &lambda % &self.q), x1), x2);
        let y3 = self.sub_mod(&(&lambda * self.sub_mod(x1, &x3) % &self.q), y1);
        Ok(Point::Affine { x: x3, y: y3 })
    }

    pub fn negate(&self, p: &Point) -> Point {
        match p {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => {
                Point::Affine { x: x.clone(), y: self.sub_mod(&BigUint::zero(), y) }
            }
        }
    }

    /// Left-to-right double-and-add.
    pub fn scalar_mult(&self, k: &Scalar, p: &Point) -> Result<Point, EccError> {
        self.require_on_curve(p)?;
        self.mult_unchecked(&k.0, p)
    }

    fn mult_unchecked(&self, k: &BigUint, p: &Point) -> Result<Point, EccError> {
        let mut acc = Point::Infinity;
        for i in (0..k.bits()).rev() {
            acc = self.point_add(&acc, &acc)?;
            if k.bit(i) {
                acc = self.point_add(&acc, p)?;
            }
        }
        Ok(acc)
    }

    /// Width in bytes of one serialized coordinate.
    pub fn coord_width(&self) -> usize {
        ((self.q.bits() + 7) / 8) as usize
    }

    /// Width in bytes of one serialized scalar.
    pub fn scalar_width(&self) -> usize {
        ((self.n.bits() + 7) / 8) as usize
    }

    fn require_on_curve(&self, p: &Point) -> Result<(), EccError> {
        if self.is_on_curve(p) {
            Ok(())
        } else {
            Err(EccError::PointNotOnCurve(format!("{p:?}")))
        }
    }

    fn sub_mod(&self, a: &BigUint, b: &BigUint) -> BigUint {
        ((a % &self.q) + &self.q - (b % &self.q)) % &self.q
    }

    fn div_mod(&self, num: &BigUint, den: &BigUint) -> Result<BigUint, EccError> {
        let inv = mod_inverse(den, &self.q)
            .ok_or_else(|| EccError::InvalidCurve(format!("{den} has no inverse mod {}", self.q)))?;
        Ok(num * inv % &self.q)
    }
}

/// Modular inverse via extended Euclid; None when gcd(a, m) != 1.
fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from(a.clone());
    let m = BigInt::from(m.clone());
    let ext = a.extended_gcd(&m);
    if !ext.gcd.is_one() {
        return None;
    }
    ext.x.mod_floor(&m).to_biguint()
}

/// Miller-Rabin with the first twelve prime witnesses: deterministic for
/// every modulus below 3.3e24 and a strong probabilistic check above that.
fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for small in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let small = BigUint::from(small);
        if n == &small {
            return true;
        }
        if (n % &small).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for w in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = BigUint::from(w).modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Uniform scalar in [1, n-1] by rejection sampling.
pub fn random_scalar<R: Rng + ?Sized>(rng: &mut R, curve: &CurveParams) -> Scalar {
    loop {
        let v = rng.gen_biguint_below(&curve.n);
        if !v.is_zero() {
            return Scalar(v);
        }
    }
}

/// Exhaustive discrete-log scan: finds k with k * base = target, trying
/// k = 0, 1, ... in order. Refuses groups larger than `bound`.
pub fn ecdlp_brute_force(
    target: &Point,
    base: &Point,
    curve: &CurveParams,
    bound: u64,
) -> Result<Scalar, EccError> {
    if curve.n > BigUint::from(bound) {
        return Err(EccError::GroupTooLarge { n: curve.n.to_string(), bound });
    }
    if !curve.is_on_curve(target) {
        return Err(EccError::PointNotOnCurve(format!("{target:?}")));
    }
    if !curve.is_on_curve(base) {
        return Err(EccError::PointNotOnCurve(format!("{base:?}")));
    }
    let mut acc = Point::Infinity;
    let mut k = BigUint::zero();
    while k < curve.n {
        if &acc == target {
            return Ok(Scalar(k));
        }
        acc = curve.point_add(&acc, base)?;
        k += 1u32;
    }
    Err(EccError::NoSolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn toy() -> &'static CurveParams {
        CurveParams::toy17()
    }

    #[test]
    fn identity_is_neutral() {
        let c = toy();
        let p = c.base.clone();
        assert_eq!(c.point_add(&p, &Point::Infinity).unwrap(), p);
        assert_eq!(c.point_add(&Point::Infinity, &p).unwrap(), p);
        assert_eq!(
            c.point_add(&Point::Infinity, &Point::Infinity).unwrap(),
            Point::Infinity
        );
    }

    #[test]
    fn inverse_pair_sums_to_identity() {
        let c = toy();
        let p = c.base.clone();
        let neg = c.negate(&p);
        assert!(c.is_on_curve(&neg));
        assert_eq!(c.point_add(&p, &neg).unwrap(), Point::Infinity);
    }

    #[test]
    fn doubling_the_base_point() {
        let c = toy();
        let doubled = c.point_add(&c.base, &c.base).unwrap();
        assert_eq!(doubled, Point::affine(6u32, 3u32));
    }

    #[test]
    fn known_small_multiples() {
        // Low multiples of (5, 1), cross-checked against the exhaustive
        // oracle in the integration suite.
        let c = toy();
        let mult = |k: u64| c.scalar_mult(&Scalar::from_u64(k, c).unwrap(), &c.base).unwrap();
        assert_eq!(mult(3), Point::affine(10u32, 6u32));
        assert_eq!(mult(5), Point::affine(9u32, 16u32));
        assert_eq!(mult(7), Point::affine(0u32, 6u32));
        assert_eq!(mult(18), Point::affine(5u32, 16u32));
    }

    #[test]
    fn scalar_mult_edge_cases() {
        let c = toy();
        let zero = Scalar::from_u64(0, c).unwrap();
        let one = Scalar::from_u64(1, c).unwrap();
        assert_eq!(c.scalar_mult(&zero, &c.base).unwrap(), Point::Infinity);
        assert_eq!(c.scalar_mult(&one, &c.base).unwrap(), c.base);
        let eighteen = Scalar::from_u64(18, c).unwrap();
        assert_eq!(c.scalar_mult(&eighteen, &Point::Infinity).unwrap(), Point::Infinity);
    }

    #[test]
    fn order_annihilates_every_point() {
        let c = toy();
        let mut p = c.base.clone();
        for _ in 0..19 {
            assert!(c.mult_unchecked(&c.n, &p).unwrap().is_infinity());
            p = c.point_add(&p, &c.base).unwrap();
        }
    }

    #[test]
    fn off_curve_inputs_are_rejected() {
        let c = toy();
        let bogus = Point::affine(2u32, 2u32);
        assert!(!c.is_on_curve(&bogus));
        assert!(matches!(
            c.point_add(&bogus, &c.base),
            Err(EccError::PointNotOnCurve(_))
        ));
        let k = Scalar::from_u64(3, c).unwrap();
        assert!(matches!(c.scalar_mult(&k, &bogus), Err(EccError::PointNotOnCurve(_))));
    }

    #[test]
    fn scalar_range_is_enforced() {
        let c = toy();
        assert!(Scalar::from_u64(18, c).is_ok());
        assert!(matches!(Scalar::from_u64(19, c), Err(EccError::ScalarOutOfRange(_))));
        assert!(matches!(Scalar::from_u64(40, c), Err(EccError::ScalarOutOfRange(_))));
    }

    #[test]
    fn random_scalars_are_in_range_and_nonzero() {
        let c = toy();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let s = random_scalar(&mut rng, c);
            assert!(!s.is_zero());
            assert!(s.value() < &c.n);
        }
    }

    #[test]
    fn brute_force_recovers_small_logs() {
        let c = toy();
        for k in 0..19u64 {
            let scalar = Scalar::from_u64(k, c).unwrap();
            let target = c.scalar_mult(&scalar, &c.base).unwrap();
            let found = ecdlp_brute_force(&target, &c.base, c, DEFAULT_ECDLP_BOUND).unwrap();
            assert_eq!(found.value(), scalar.value());
        }
    }

    #[test]
    fn brute_force_bound_and_no_solution() {
        let c = toy();
        let seven = c.scalar_mult(&Scalar::from_u64(7, c).unwrap(), &c.base).unwrap();
        assert!(matches!(
            ecdlp_brute_force(&seven, &c.base, c, 5),
            Err(EccError::GroupTooLarge { .. })
        ));
        // The identity generates nothing but itself.
        assert!(matches!(
            ecdlp_brute_force(&c.base, &Point::Infinity, c, DEFAULT_ECDLP_BOUND),
            Err(EccError::NoSolution)
        ));
        let big = CurveParams::std256();
        assert!(matches!(
            ecdlp_brute_force(&big.base, &big.base, big, DEFAULT_ECDLP_BOUND),
            Err(EccError::GroupTooLarge { .. })
        ));
    }

    #[test]
    fn singular_and_malformed_curves_are_rejected() {
        // y^2 = x^3 (a = b = 0) has a zero discriminant.
        assert!(matches!(
            CurveParams::new(
                BigUint::from(17u32),
                BigUint::zero(),
                BigUint::zero(),
                Point::affine(5u32, 1u32),
                BigUint::from(19u32),
                "singular",
            ),
            Err(EccError::InvalidCurve(_))
        ));
        // Composite field modulus.
        assert!(matches!(
            CurveParams::new(
                BigUint::from(15u32),
                BigUint::from(2u32),
                BigUint::from(2u32),
                Point::affine(5u32, 1u32),
                BigUint::from(19u32),
                "composite",
            ),
            Err(EccError::InvalidCurve(_))
        ));
        // Wrong group order fails the n * base = O check.
        assert!(matches!(
            CurveParams::new(
                BigUint::from(17u32),
                BigUint::from(2u32),
                BigUint::from(2u32),
                Point::affine(5u32, 1u32),
                BigUint::from(18u32),
                "wrong-order",
            ),
            Err(EccError::InvalidCurve(_))
        ));
    }

    #[test]
    fn std256_profile_loads_and_validates() {
        let c = CurveParams::std256();
        assert_eq!(c.coord_width(), 32);
        assert_eq!(c.scalar_width(), 32);
        assert!(c.is_on_curve(&c.base));
    }

    #[test]
    fn dh_commutes_on_both_profiles() {
        for (curve, pairs) in [(CurveParams::toy17(), 50), (CurveParams::std256(), 3)] {
            let mut rng = StdRng::seed_from_u64(11);
            for _ in 0..pairs {
                let x = random_scalar(&mut rng, curve);
                let y = random_scalar(&mut rng, curve);
                let xp = curve.scalar_mult(&x, &curve.base).unwrap();
                let yp = curve.scalar_mult(&y, &curve.base).unwrap();
                let xyp = curve.scalar_mult(&x, &yp).unwrap();
                let yxp = curve.scalar_mult(&y, &xp).unwrap();
                assert_eq!(xyp, yxp);
                let product =
                    Scalar::new(x.value() * y.value() % &curve.n, curve).unwrap();
                assert_eq!(curve.scalar_mult(&product, &curve.base).unwrap(), xyp);
            }
        }
    }

    #[test]
    fn mixed_toy_group_walk_matches_negation() {
        // 19 is prime, so every nonzero multiple is a generator; walking
        // forward k steps and negating lands on the (19 - k)th multiple.
        let c = toy();
        let mut forward = c.base.clone();
        for k in 1..19u64 {
            let back = c
                .scalar_mult(&Scalar::from_u64(19 - k, c).unwrap(), &c.base)
                .unwrap();
            assert_eq!(c.negate(&forward), back);
            forward = c.point_add(&forward, &c.base).unwrap();
        }
    }
}
