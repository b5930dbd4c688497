//! Exact multivariate rational functions over named size variables.
//!
//! A [`Term`] is `numerator / denominator` where both sides are sparse
//! polynomials with [`Rational`] coefficients. Canonical form keeps
//! coefficients reduced, absorbs constant denominators into the numerator,
//! cancels common monomial content and exact polynomial quotients, and makes
//! a remaining denominator monic. Equality is decided by cross-multiplication,
//! so two terms compare equal whenever they denote the same rational function.
//!
//! Monomials are ordered graded-lexicographically. Variables are ranked by
//! name in descending order (`n` outranks `m`), which is also the order they
//! are printed in: `n*m`, never `m*n`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact coefficient domain. Always reduced with a positive denominator.
pub type Rational = BigRational;

/// Variable bindings used by [`Term::eval`].
pub type Assignment = BTreeMap<String, Rational>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("invalid variable name {0:?}")]
    InvalidVariable(String),
    #[error("division by the zero term")]
    DivisionByZero,
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("denominator evaluates to zero")]
    Singularity,
}

pub fn rational(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Builds an [`Assignment`] from integer bindings.
pub fn assignment<'a>(pairs: impl IntoIterator<Item = (&'a str, i64)>) -> Assignment {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), rational(v)))
        .collect()
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Product of variables with positive exponents. Absent variables have
/// exponent zero, so the empty monomial is the constant `1`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Monomial(BTreeMap<String, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(name: &str) -> Self {
        let mut m = BTreeMap::new();
        m.insert(name.to_string(), 1);
        Monomial(m)
    }

    pub fn from_exponents<'a>(pairs: impl IntoIterator<Item = (&'a str, u32)>) -> Self {
        Monomial(
            pairs
                .into_iter()
                .filter(|&(_, e)| e > 0)
                .map(|(k, e)| (k.to_string(), e))
                .collect(),
        )
    }

    pub fn exponent(&self, var: &str) -> u32 {
        self.0.get(var).copied().unwrap_or(0)
    }

    pub fn exponents(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, &e)| (k.as_str(), e))
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (k, e) in &other.0 {
            *out.entry(k.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }

    /// `self / other` when every exponent of `other` fits into `self`.
    fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = self.0.clone();
        for (k, &e) in &other.0 {
            let have = out.get(k).copied().unwrap_or(0);
            if have < e {
                return None;
            }
            if have == e {
                out.remove(k);
            } else {
                out.insert(k.clone(), have - e);
            }
        }
        Some(Monomial(out))
    }

    fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .filter_map(|(k, &e)| other.0.get(k).map(|&f| (k.clone(), e.min(f))))
                .collect(),
        )
    }

    fn eval(&self, values: &Assignment) -> Result<Rational, TermError> {
        let mut acc = Rational::one();
        for (k, &e) in &self.0 {
            let v = values
                .get(k)
                .ok_or_else(|| TermError::UnboundVariable(k.clone()))?;
            acc *= num_traits::pow(v.clone(), e as usize);
        }
        Ok(acc)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let mut a = self.0.iter().rev().peekable();
        let mut b = other.0.iter().rev().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((ka, ea)), Some((kb, eb))) => match ka.cmp(kb) {
                    Ordering::Equal => {
                        match ea.cmp(eb) {
                            Ordering::Equal => {}
                            ord => return ord,
                        }
                        a.next();
                        b.next();
                    }
                    // the higher-ranked variable is present only on one side
                    Ordering::Greater => return Ordering::Greater,
                    Ordering::Less => return Ordering::Less,
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, (k, e)) in self.0.iter().rev().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                f.write_str(k)?;
            } else {
                write!(f, "{k}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse polynomial. The zero polynomial is the empty map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Polynomial(BTreeMap<Monomial, Rational>);

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial(BTreeMap::new())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 => self
                .0
                .iter()
                .next()
                .filter(|(m, _)| m.is_one())
                .map(|(_, c)| c.clone()),
            _ => None,
        }
    }

    /// Leading term under the graded order.
    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.0.last_key_value()
    }

    /// Terms in descending monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.0.iter().rev()
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.0.keys().flat_map(|m| m.0.keys().map(String::as_str))
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.0.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    fn neg(&self) -> Polynomial {
        Polynomial(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), -c);
        }
        out
    }

    fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial(self.0.iter().map(|(m, k)| (m.clone(), k * c)).collect())
    }

    fn mul_term(&self, m: &Monomial, c: &Rational) -> Polynomial {
        Polynomial(self.0.iter().map(|(k, v)| (k.mul(m), v * c)).collect())
    }

    fn div_monomial(&self, m: &Monomial) -> Polynomial {
        Polynomial(
            self.0
                .iter()
                .map(|(k, v)| (k.div(m).expect("monomial content divides"), v.clone()))
                .collect(),
        )
    }

    fn content(&self) -> Option<Monomial> {
        let mut it = self.0.keys();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, m| acc.gcd(m)))
    }

    /// Exact quotient `self / divisor`, or `None` when the division leaves a
    /// remainder. Under a monomial order the leading term of any multiple of
    /// `divisor` is divisible by the divisor's leading term, so a failed
    /// leading-term division proves non-divisibility.
    fn div_exact(&self, divisor: &Polynomial) -> Option<Polynomial> {
        let (dm, dc) = divisor.leading()?;
        let mut rem = self.clone();
        let mut quot = Polynomial::zero();
        while let Some((rm, rc)) = rem.leading() {
            let qm = rm.div(dm)?;
            let qc = rc / dc;
            rem = rem.sub(&divisor.mul_term(&qm, &qc));
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    /// Remainder of reducing by `divisor`'s leading term until that is no
    /// longer possible. A true Euclidean remainder for univariate inputs.
    fn reduce(&self, divisor: &Polynomial) -> Polynomial {
        let Some((dm, dc)) = divisor.leading() else {
            return self.clone();
        };
        let mut rem = self.clone();
        while let Some((rm, rc)) = rem.leading() {
            let Some(qm) = rm.div(dm) else { break };
            let qc = rc / dc;
            rem = rem.sub(&divisor.mul_term(&qm, &qc));
        }
        rem
    }

    fn monic(&self) -> Polynomial {
        match self.leading() {
            Some((_, c)) => self.scale(&c.recip()),
            None => self.clone(),
        }
    }

    /// Monic GCD of two polynomials in the same single variable.
    fn univariate_gcd(&self, other: &Polynomial) -> Polynomial {
        let (mut a, mut b) = (self.monic(), other.monic());
        while !b.is_zero() {
            let r = a.reduce(&b);
            a = b;
            b = r.monic();
        }
        a
    }

    pub fn eval(&self, values: &Assignment) -> Result<Rational, TermError> {
        let mut acc = Rational::zero();
        for (m, c) in &self.0 {
            acc += m.eval(values)? * c;
        }
        Ok(acc)
    }
}

fn write_coefficient(f: &mut fmt::Formatter<'_>, c: &Rational) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms().enumerate() {
            let abs = c.abs();
            match (i, c.is_negative()) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                write_coefficient(f, &abs)?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write_coefficient(f, &abs)?;
                write!(f, "*{m}")?;
            }
        }
        Ok(())
    }
}

/// A canonical rational function of the input-size variables.
#[derive(Debug, Clone)]
pub struct Term {
    num: Polynomial,
    den: Polynomial,
}

impl Term {
    pub fn zero() -> Self {
        Term {
            num: Polynomial::zero(),
            den: Polynomial::constant(Rational::one()),
        }
    }

    pub fn one() -> Self {
        Term::constant(Rational::one())
    }

    pub fn constant(q: Rational) -> Self {
        Term {
            num: Polynomial::constant(q),
            den: Polynomial::constant(Rational::one()),
        }
    }

    pub fn int(n: i64) -> Self {
        Term::constant(rational(n))
    }

    pub fn var(name: &str) -> Result<Self, TermError> {
        if !is_identifier(name) {
            return Err(TermError::InvalidVariable(name.to_string()));
        }
        Ok(Term {
            num: Polynomial::monomial(Monomial::var(name), Rational::one()),
            den: Polynomial::constant(Rational::one()),
        })
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        Term {
            num: p,
            den: Polynomial::constant(Rational::one()),
        }
    }

    /// Builds `num / den` in canonical form.
    pub fn ratio(num: Polynomial, den: Polynomial) -> Result<Self, TermError> {
        if den.is_zero() {
            return Err(TermError::DivisionByZero);
        }
        Ok(Self::normalize(num, den))
    }

    fn normalize(mut num: Polynomial, mut den: Polynomial) -> Self {
        if num.is_zero() {
            return Term::zero();
        }
        if let Some(c) = den.as_constant() {
            return Term::from_polynomial(num.scale(&c.recip()));
        }
        let content = num
            .content()
            .zip(den.content())
            .map(|(a, b)| a.gcd(&b))
            .unwrap_or_default();
        if !content.is_one() {
            num = num.div_monomial(&content);
            den = den.div_monomial(&content);
            if let Some(c) = den.as_constant() {
                return Term::from_polynomial(num.scale(&c.recip()));
            }
        }
        if let Some(q) = num.div_exact(&den) {
            return Term::from_polynomial(q);
        }
        let vars: std::collections::BTreeSet<&str> = num.variables().chain(den.variables()).collect();
        if vars.len() == 1 {
            let g = num.univariate_gcd(&den);
            if g.as_constant().is_none() {
                num = num.div_exact(&g).expect("gcd divides numerator");
                den = den.div_exact(&g).expect("gcd divides denominator");
                if let Some(c) = den.as_constant() {
                    return Term::from_polynomial(num.scale(&c.recip()));
                }
            }
        }
        let lead = den.leading().expect("nonzero denominator").1.recip();
        Term {
            num: num.scale(&lead),
            den: den.scale(&lead),
        }
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// The value of a term without variables.
    pub fn as_constant(&self) -> Option<Rational> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn as_integer(&self) -> Option<BigInt> {
        self.as_constant().filter(|c| c.is_integer()).map(|c| c.to_integer())
    }

    pub fn variables(&self) -> Vec<String> {
        let mut vars: Vec<String> = self
            .num
            .variables()
            .chain(self.den.variables())
            .map(str::to_string)
            .collect();
        vars.sort();
        vars.dedup();
        vars
    }

    pub fn checked_div(&self, rhs: &Term) -> Result<Term, TermError> {
        if rhs.is_zero() {
            return Err(TermError::DivisionByZero);
        }
        Ok(Self::normalize(
            self.num.mul(&rhs.den),
            self.den.mul(&rhs.num),
        ))
    }

    /// `self * factor / divisor` for a positive integer divisor.
    pub fn scale(&self, factor: &Term, divisor: u64) -> Term {
        let product = self * factor;
        if divisor == 1 {
            return product;
        }
        let inv = Rational::new(BigInt::one(), BigInt::from(divisor));
        Term {
            num: product.num.scale(&inv),
            den: product.den,
        }
    }

    pub fn eval(&self, values: &Assignment) -> Result<Rational, TermError> {
        let d = self.den.eval(values)?;
        let n = self.num.eval(values)?;
        if d.is_zero() {
            return Err(TermError::Singularity);
        }
        Ok(n / d)
    }

    /// Asymptotic class: leading numerator monomial over leading denominator
    /// monomial, with coefficients dropped.
    pub fn big_o(&self) -> BigO {
        let Some((nm, _)) = self.num.leading() else {
            return BigO {
                exponents: BTreeMap::new(),
                exactly_zero: true,
            };
        };
        let mut exps: BTreeMap<String, i64> =
            nm.exponents().map(|(k, e)| (k.to_string(), e as i64)).collect();
        if let Some((dm, _)) = self.den.leading() {
            for (k, e) in dm.exponents() {
                *exps.entry(k.to_string()).or_insert(0) -= e as i64;
            }
        }
        exps.retain(|_, e| *e != 0);
        BigO {
            exponents: exps,
            exactly_zero: false,
        }
    }

    fn add_impl(&self, rhs: &Term) -> Term {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        if self.den == rhs.den {
            if self.den.is_one() {
                return Term::from_polynomial(self.num.add(&rhs.num));
            }
            return Self::normalize(self.num.add(&rhs.num), self.den.clone());
        }
        Self::normalize(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    fn mul_impl(&self, rhs: &Term) -> Term {
        if self.den.is_one() && rhs.den.is_one() {
            return Term::from_polynomial(self.num.mul(&rhs.num));
        }
        Self::normalize(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }
}

impl Default for Term {
    fn default() -> Self {
        Term::zero()
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        self.num
            .mul(&other.den)
            .sub(&other.num.mul(&self.den))
            .is_zero()
    }
}

impl Eq for Term {}

impl From<i64> for Term {
    fn from(n: i64) -> Self {
        Term::int(n)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl Add for &Term {
    type Output = Term;
    fn add(self, rhs: &Term) -> Term {
        self.add_impl(rhs)
    }
}

impl Sub for &Term {
    type Output = Term;
    fn sub(self, rhs: &Term) -> Term {
        self.add_impl(&-rhs)
    }
}

impl Mul for &Term {
    type Output = Term;
    fn mul(self, rhs: &Term) -> Term {
        self.mul_impl(rhs)
    }
}

impl Neg for &Term {
    type Output = Term;
    fn neg(self) -> Term {
        Term {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Term {
            type Output = Term;
            fn $m(self, rhs: Term) -> Term {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl Neg for Term {
    type Output = Term;
    fn neg(self) -> Term {
        -&self
    }
}

/// Leading-order class of a term, possibly with negative exponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigO {
    pub exponents: BTreeMap<String, i64>,
    /// Set when the term is identically zero; rendered as `O(1)`.
    pub exactly_zero: bool,
}

impl BigO {
    pub fn exponent(&self, var: &str) -> i64 {
        self.exponents.get(var).copied().unwrap_or(0)
    }
}

fn write_factors<'a>(
    f: &mut fmt::Formatter<'_>,
    factors: impl Iterator<Item = (&'a String, i64)>,
) -> fmt::Result {
    for (i, (k, e)) in factors.enumerate() {
        if i > 0 {
            f.write_str("*")?;
        }
        if e == 1 {
            f.write_str(k)?;
        } else {
            write!(f, "{k}^{e}")?;
        }
    }
    Ok(())
}

impl fmt::Display for BigO {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pos: Vec<_> = self
            .exponents
            .iter()
            .rev()
            .filter(|(_, &e)| e > 0)
            .map(|(k, &e)| (k, e))
            .collect();
        let neg: Vec<_> = self
            .exponents
            .iter()
            .rev()
            .filter(|(_, &e)| e < 0)
            .map(|(k, &e)| (k, -e))
            .collect();
        f.write_str("O(")?;
        if pos.is_empty() {
            f.write_str("1")?;
        } else {
            write_factors(f, pos.into_iter())?;
        }
        if !neg.is_empty() {
            f.write_str("/")?;
            if neg.len() > 1 || neg[0].1 != 1 {
                f.write_str("(")?;
                write_factors(f, neg.into_iter())?;
                f.write_str(")")?;
            } else {
                write_factors(f, neg.into_iter())?;
            }
        }
        f.write_str(")")
    }
}
