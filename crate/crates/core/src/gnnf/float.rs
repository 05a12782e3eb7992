use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{GnnError, Result};

/// A floating-point system over `p` significand digits, `q` exponent digits and
/// base `β`. Values are `±0.d_1⋯d_p × β^{±e_1⋯e_q}`; arithmetic is exact followed
/// by rounding to the nearest value, saturating at `±max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FloatSystem {
    p: u32,
    q: u32,
    beta: u32,
    /// `β^p`.
    scale: u64,
    /// Largest exponent, `β^q - 1`.
    emax: i32,
}

/// A value of a [`FloatSystem`], in canonical form: the smallest exponent that
/// represents it, and `+0` as the only zero. Each value thus has exactly one
/// encoding and equality is value equality.
///
/// The value is `±mant × β^(exp - p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FloatNum {
    neg: bool,
    mant: u64,
    exp: i32,
}

impl FloatSystem {
    pub fn new(p: u32, q: u32, beta: u32) -> Result<Self> {
        let bad = |why: &str| Err(GnnError::InvalidSystem(format!("({p},{q},{beta}): {why}")));
        if p == 0 || q == 0 {
            return bad("digit counts must be positive");
        }
        if beta < 2 {
            return bad("base must be at least 2");
        }
        let scale = match u64::from(beta).checked_pow(p) {
            Some(s) if s <= 1 << 62 => s,
            _ => return bad("significand too wide"),
        };
        let emax = match u64::from(beta).checked_pow(q) {
            Some(e) if e <= 1 << 20 => e as i32 - 1,
            _ => return bad("exponent range too wide"),
        };
        Ok(Self {
            p,
            q,
            beta,
            scale,
            emax,
        })
    }

    /// The smallest binary system with two exponent digits or more that represents
    /// every integer up to `k`.
    pub fn for_bound(k: u64) -> Result<Self> {
        let p = (64 - k.leading_zeros()).max(1);
        let q = (2..).find(|&q| (1u32 << q) > p).expect("some exponent width fits");
        Self::new(p, q, 2)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn beta(&self) -> u32 {
        self.beta
    }

    pub fn zero(&self) -> FloatNum {
        FloatNum {
            neg: false,
            mant: 0,
            exp: 0,
        }
    }

    /// The largest value, `(β^p - 1) · β^(emax - p)`.
    pub fn max(&self) -> FloatNum {
        FloatNum {
            neg: false,
            mant: self.scale - 1,
            exp: self.emax,
        }
    }

    fn pow(&self, e: i64) -> BigRational {
        let b = BigRational::from_integer(BigInt::from(self.beta));
        if e >= 0 {
            num_traits::pow(b, e as usize)
        } else {
            num_traits::pow(b, (-e) as usize).recip()
        }
    }

    /// Exact value.
    pub fn decode(&self, x: FloatNum) -> BigRational {
        let v = BigRational::from_integer(BigInt::from(x.mant)) * self.pow(i64::from(x.exp) - i64::from(self.p));
        if x.neg {
            -v
        } else {
            v
        }
    }

    fn canonical(&self, neg: bool, mut mant: u64, mut exp: i32) -> FloatNum {
        if mant == 0 {
            return self.zero();
        }
        let beta = u64::from(self.beta);
        while mant * beta < self.scale && exp > -self.emax {
            mant *= beta;
            exp -= 1;
        }
        FloatNum { neg, mant, exp }
    }

    /// The value closest to `r`. Ties round away from zero; magnitudes beyond the
    /// maximum saturate to `±max`.
    pub fn nearest(&self, r: &BigRational) -> FloatNum {
        if r.is_zero() {
            return self.zero();
        }
        let neg = r.is_negative();
        let a = r.abs();
        let max = self.decode(self.max());
        if a >= max {
            return FloatNum { neg, ..self.max() };
        }
        // smallest e in [-emax, emax] with a < β^e
        let bits = a.numer().bits() as f64 - a.denom().bits() as f64;
        let guess = (bits / f64::from(self.beta).log2()).floor() as i64;
        let mut e = guess.clamp(-i64::from(self.emax), i64::from(self.emax));
        while e > -i64::from(self.emax) && a < self.pow(e - 1) {
            e -= 1;
        }
        while a >= self.pow(e) {
            e += 1;
        }
        let m = &a * self.pow(i64::from(self.p) - e);
        let floor = m.floor();
        let frac = &m - &floor;
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let mut mant = floor.to_integer();
        if frac >= half {
            mant += 1;
        }
        let mant = mant.to_u64().expect("rounded significand fits");
        if mant == self.scale {
            return self.canonical(neg, self.scale / u64::from(self.beta), e as i32 + 1);
        }
        self.canonical(neg, mant, e as i32)
    }

    /// `nearest(n · β^s)` in machine integers; `None` on overflow.
    fn nearest_scaled(&self, n: i128, s: i64) -> Option<FloatNum> {
        if n == 0 {
            return Some(self.zero());
        }
        let (neg, n) = (n < 0, n.unsigned_abs());
        let beta = u128::from(self.beta);
        let emax = i64::from(self.emax);
        let mut digits = 0i64;
        let mut rest = n;
        while rest > 0 {
            rest /= beta;
            digits += 1;
        }
        let e = (digits + s).max(-emax);
        if e > emax {
            return Some(FloatNum { neg, ..self.max() });
        }
        let t = s + i64::from(self.p) - e;
        let mant = if t >= 0 {
            n.checked_mul(beta.checked_pow(t as u32)?)?
        } else {
            let d = beta.checked_pow(u32::try_from(-t).ok()?)?;
            let (q, r) = (n / d, n % d);
            if 2 * r >= d {
                q + 1
            } else {
                q
            }
        };
        let mant = u64::try_from(mant).ok()?;
        let (mant, e) = if mant == self.scale {
            (self.scale / beta as u64, e + 1)
        } else {
            (mant, e)
        };
        if e > emax {
            return Some(FloatNum { neg, ..self.max() });
        }
        Some(self.canonical(neg, mant, e as i32))
    }

    fn parts(&self, x: FloatNum) -> (i128, i64) {
        let n = i128::from(x.mant);
        (if x.neg { -n } else { n }, i64::from(x.exp) - i64::from(self.p))
    }

    pub fn add(&self, a: FloatNum, b: FloatNum) -> FloatNum {
        let ((na, sa), (nb, sb)) = (self.parts(a), self.parts(b));
        let s = sa.min(sb);
        let align = |n: i128, from: i64| {
            i128::from(self.beta)
                .checked_pow(u32::try_from(from - s).ok()?)
                .and_then(|f| n.checked_mul(f))
        };
        let fast = align(na, sa)
            .zip(align(nb, sb))
            .and_then(|(x, y)| x.checked_add(y))
            .and_then(|n| self.nearest_scaled(n, s));
        fast.unwrap_or_else(|| self.nearest(&(self.decode(a) + self.decode(b))))
    }

    pub fn mul(&self, a: FloatNum, b: FloatNum) -> FloatNum {
        let ((na, sa), (nb, sb)) = (self.parts(a), self.parts(b));
        self.nearest_scaled(na * nb, sa + sb)
            .unwrap_or_else(|| self.nearest(&(self.decode(a) * self.decode(b))))
    }

    pub fn neg(&self, a: FloatNum) -> FloatNum {
        if a.mant == 0 {
            a
        } else {
            FloatNum { neg: !a.neg, ..a }
        }
    }

    /// The integer `n` if it is a value of the system.
    pub fn int(&self, n: i64) -> Option<FloatNum> {
        let r = BigRational::from_integer(BigInt::from(n));
        let f = self.nearest(&r);
        (self.decode(f) == r).then_some(f)
    }

    pub fn one(&self) -> Option<FloatNum> {
        self.int(1)
    }

    /// `min(max(0, x), 1)`; fails if 1 is not a value of the system.
    pub fn relu_star(&self, x: FloatNum) -> Result<FloatNum> {
        let one = self.one().ok_or_else(|| GnnError::SystemTooSmall(format!("{self} cannot represent 1")))?;
        Ok(if x.neg || x.mant == 0 {
            self.zero()
        } else if x > one {
            one
        } else {
            x
        })
    }

    /// Every value of the system in increasing order.
    pub fn values(&self) -> Vec<FloatNum> {
        let mut pos = Vec::new();
        for exp in -self.emax..=self.emax {
            for mant in 1..self.scale {
                let f = self.canonical(false, mant, exp);
                if f.exp == exp && f.mant == mant {
                    pos.push(f);
                }
            }
        }
        pos.sort();
        let mut out: Vec<FloatNum> = pos.iter().rev().map(|&f| self.neg(f)).collect();
        out.push(self.zero());
        out.extend(pos);
        out
    }

    /// The `(±d_1⋯d_p, ±e_1⋯e_q)` digit strings of a value.
    pub fn encoding(&self, x: FloatNum) -> String {
        let digits = |mut v: u64, n: u32| {
            let mut d = vec![0u64; n as usize];
            for slot in d.iter_mut().rev() {
                *slot = v % u64::from(self.beta);
                v /= u64::from(self.beta);
            }
            let sep = if self.beta > 10 { "." } else { "" };
            d.iter().map(u64::to_string).collect::<Vec<_>>().join(sep)
        };
        format!(
            "({}{}, {}{})",
            if x.neg { '-' } else { '+' },
            digits(x.mant, self.p),
            if x.exp < 0 { '-' } else { '+' },
            digits(u64::from(x.exp.unsigned_abs()), self.q)
        )
    }

    /// Exact value as `n` or `n/d`.
    pub fn show(&self, x: FloatNum) -> String {
        let r = self.decode(x);
        if r.is_integer() {
            r.numer().to_string()
        } else {
            format!("{}/{}", r.numer(), r.denom())
        }
    }

    /// Parses a decimal (`-1.25`, `3e-2`) or fraction (`3/8`) literal and rounds it
    /// into the system. The flag tells whether the literal was exact.
    pub fn parse(&self, text: &str) -> Result<(FloatNum, bool)> {
        let r = parse_rational(text)?;
        let f = self.nearest(&r);
        Ok((f, self.decode(f) == r))
    }
}

impl fmt::Display for FloatSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sys({},{},{})", self.p, self.q, self.beta)
    }
}

/// Exact rational from a decimal or fraction literal.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || GnnError::Literal(text.to_string());
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}0").parse().map_err(|_| bad())?;
    let ten = BigRational::from_integer(BigInt::from(10));
    let shift = exp - frac.len() as i32 - 1;
    let scale = if shift >= 0 {
        num_traits::pow(ten, shift as usize)
    } else {
        num_traits::pow(ten, (-shift) as usize).recip()
    };
    let r = BigRational::from_integer(digits) * scale;
    Ok(if neg { -r } else { r })
}

impl FloatNum {
    pub fn is_zero(self) -> bool {
        self.mant == 0
    }

    pub fn is_negative(self) -> bool {
        self.neg
    }
}

impl Ord for FloatNum {
    /// Value order. Canonical forms use the smallest exponent, so among positive
    /// values a larger exponent always means a larger value.
    fn cmp(&self, other: &Self) -> Ordering {
        let key = |x: &FloatNum| (x.mant != 0, x.exp, x.mant);
        match (self.neg, other.neg) {
            (false, false) => key(self).cmp(&key(other)),
            (true, true) => key(other).cmp(&key(self)),
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
        }
    }
}

impl PartialOrd for FloatNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn small_system_examples() {
        let s = FloatSystem::new(1, 1, 2).unwrap();
        // (+1, +1) is 0.1₂ × 2¹
        let one = s.nearest(&rat(1, 1));
        assert_eq!(s.encoding(one), "(+1, +1)");
        assert_eq!(s.decode(one), rat(1, 1));
        assert_eq!(s.max(), one);
        assert_eq!(s.nearest(&rat(2, 1)), one);
        let half = s.nearest(&rat(1, 2));
        assert_eq!(s.decode(half), rat(1, 2));
        assert_eq!(s.add(half, half), one);
        assert_eq!(s.add(one, one), one);
    }

    #[test]
    fn demo_system_max() {
        let s = FloatSystem::new(4, 2, 2).unwrap();
        assert_eq!(s.decode(s.max()), rat(15, 2));
        assert!(s.int(7).is_some());
        assert!(s.int(9).is_none());
    }

    #[test]
    fn ties_round_away_from_zero() {
        let s = FloatSystem::new(1, 1, 2).unwrap();
        // values 1/4, 1/2 are neighbours; 3/8 is halfway
        assert_eq!(s.decode(s.nearest(&rat(3, 8))), rat(1, 2));
        assert_eq!(s.decode(s.nearest(&rat(-3, 8))), rat(-1, 2));
    }

    #[test]
    fn values_are_sorted_and_symmetric() {
        for (p, q, b) in [(1, 1, 2), (2, 1, 2), (2, 2, 3), (2, 1, 10)] {
            let s = FloatSystem::new(p, q, b).unwrap();
            let v = s.values();
            let dec: Vec<BigRational> = v.iter().map(|&f| s.decode(f)).collect();
            assert!(dec.windows(2).all(|w| w[0] < w[1]), "{s}");
            assert!(v.iter().all(|&f| v.contains(&s.neg(f))));
            assert!(v.iter().all(|&f| s.nearest(&s.decode(f)) == f));
        }
        assert_eq!(FloatSystem::new(2, 1, 2).unwrap().values().len(), 15);
    }

    #[test]
    fn integer_path_matches_rational_path() {
        for (p, q, b) in [(2, 1, 2), (2, 1, 3), (1, 1, 5), (3, 1, 2)] {
            let s = FloatSystem::new(p, q, b).unwrap();
            let v = s.values();
            for &x in &v {
                for &y in &v {
                    assert_eq!(s.add(x, y), s.nearest(&(s.decode(x) + s.decode(y))));
                    assert_eq!(s.mul(x, y), s.nearest(&(s.decode(x) * s.decode(y))));
                }
            }
        }
    }

    #[test]
    fn relu_star_clamps() {
        let s = FloatSystem::new(4, 2, 2).unwrap();
        let r = |t: &str| s.relu_star(s.parse(t).unwrap().0).unwrap();
        assert!(r("-0.5").is_zero());
        assert_eq!(s.show(r("1.7")), "1");
        assert_eq!(s.show(r("0.375")), "3/8");
        let tiny = FloatSystem::new(1, 1, 3).unwrap();
        assert!(tiny.one().is_some());
        assert!(FloatSystem::new(1, 1, 2).unwrap().relu_star(s.zero()).is_ok());
    }

    #[test]
    fn literals() {
        assert_eq!(parse_rational("-1.25").unwrap(), rat(-5, 4));
        assert_eq!(parse_rational("3e-2").unwrap(), rat(3, 100));
        assert_eq!(parse_rational("3/8").unwrap(), rat(3, 8));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational("").is_err());
        let s = FloatSystem::new(4, 2, 2).unwrap();
        assert!(!s.parse("0.3").unwrap().1);
        assert!(s.parse("0.375").unwrap().1);
    }
}
