//! Minimal symbolic scalar algebra.
//!
//! Everything downstream — differential forms, vector fields, energies,
//! constraint functions — is a table of [`Expr`] values, so this module keeps
//! the representation small and predictable:
//!
//! * expressions are immutable trees behind [`Arc`], cheap to clone and safe
//!   to share across threads;
//! * smart constructors keep every tree in a canonical form (flattened and
//!   sorted sums/products, collected like terms, folded numeric subtrees) but
//!   never expand products over sums on their own;
//! * the primitive set is exactly what smooth mechanics needs: `+ - * /`,
//!   rational powers, `sin`, `cos`, `exp`, `log`, named coordinates and
//!   parameters, and named external functions of the time coordinate with a
//!   derivative-order tag (`ell(t)`, `ell'(t)`, ...).
//!
//! Canonical forms make syntactic cancellation reliable (`v - v` builds the
//! constant `0`), and the randomized zero oracle in [`zero`] covers the
//! identities that rule-based rewriting cannot see.

pub mod eval;
pub mod parse;
pub mod zero;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Exact rational number used for power exponents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i64,
    den: i64,
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    /// Build `num/den` in lowest terms with a positive denominator.
    ///
    /// # Panics
    /// Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "rational exponent with zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        Rational {
            num: sign * num / g,
            den: den.abs() / g,
        }
    }

    pub fn int(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn numerator(&self) -> i64 {
        self.num
    }

    pub fn denominator(&self) -> i64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn add(self, other: Rational) -> Rational {
        Rational::new(self.num * other.den + other.num * self.den, self.den * other.den)
    }

    fn sub(self, other: Rational) -> Rational {
        Rational::new(self.num * other.den - other.num * self.den, self.den * other.den)
    }

    fn mul(self, other: Rational) -> Rational {
        Rational::new(self.num * other.num, self.den * other.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a.max(1)
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Expression node. Constructed only through the smart constructors on
/// [`Expr`], which maintain the canonical-form invariants documented there.
#[derive(Debug, Clone)]
enum Node {
    /// Finite real constant. `-0.0` is normalized to `0.0`.
    Num(f64),
    /// Coordinate or parameter symbol. `pi` is reserved for the circle
    /// constant and is never a coordinate.
    Sym(Arc<str>),
    /// External function of the time coordinate, differentiated `order`
    /// times. `arg` records the time symbol it is applied to.
    Ext {
        name: Arc<str>,
        arg: Arc<str>,
        order: u32,
    },
    /// Sum of at least two terms in canonical order with collected like terms.
    Add(Vec<Expr>),
    /// Product of at least two factors in canonical order; a numeric
    /// coefficient, if any, is the first factor.
    Mul(Vec<Expr>),
    /// Rational power with exponent not 0 or 1.
    Pow(Expr, Rational),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    Log(Expr),
}

/// Immutable symbolic expression in canonical form.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        node_cmp(&self.0, &other.0) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        node_cmp(&self.0, &other.0)
    }
}

fn rank(n: &Node) -> u8 {
    match n {
        Node::Num(_) => 0,
        Node::Sym(_) => 1,
        Node::Ext { .. } => 2,
        Node::Pow(..) => 3,
        Node::Sin(_) => 4,
        Node::Cos(_) => 5,
        Node::Exp(_) => 6,
        Node::Log(_) => 7,
        Node::Mul(_) => 8,
        Node::Add(_) => 9,
    }
}

/// Total order on canonical nodes: by kind, then contents. Constants are
/// finite by construction, so `partial_cmp` on them never fails.
fn node_cmp(a: &Node, b: &Node) -> Ordering {
    rank(a).cmp(&rank(b)).then_with(|| match (a, b) {
        (Node::Num(x), Node::Num(y)) => x.partial_cmp(y).expect("finite constants"),
        (Node::Sym(x), Node::Sym(y)) => x.cmp(y),
        (
            Node::Ext { name: na, order: oa, .. },
            Node::Ext { name: nb, order: ob, .. },
        ) => na.cmp(nb).then(oa.cmp(ob)),
        (Node::Pow(ba, ea), Node::Pow(bb, eb)) => {
            ba.cmp(bb).then_with(|| ea.as_f64().partial_cmp(&eb.as_f64()).expect("finite"))
        }
        (Node::Sin(x), Node::Sin(y))
        | (Node::Cos(x), Node::Cos(y))
        | (Node::Exp(x), Node::Exp(y))
        | (Node::Log(x), Node::Log(y)) => x.cmp(y),
        (Node::Add(xs), Node::Add(ys)) | (Node::Mul(xs), Node::Mul(ys)) => xs.cmp(ys),
        _ => unreachable!("rank already discriminated"),
    })
}

impl Expr {
    fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    fn node(&self) -> &Node {
        &self.0
    }

    /// Finite numeric constant. `-0.0` normalizes to `0.0`.
    ///
    /// # Panics
    /// Panics on NaN or infinite input; numeric folding never produces them
    /// from finite inputs in the supported primitive set.
    pub fn num(v: f64) -> Expr {
        assert!(v.is_finite(), "non-finite constant in expression");
        Expr::new(Node::Num(if v == 0.0 { 0.0 } else { v }))
    }

    pub fn int(v: i64) -> Expr {
        Expr::num(v as f64)
    }

    pub fn zero() -> Expr {
        Expr::num(0.0)
    }

    pub fn one() -> Expr {
        Expr::num(1.0)
    }

    /// The reserved circle constant, kept symbolic for readable output.
    pub fn pi() -> Expr {
        Expr::sym("pi")
    }

    /// Coordinate or parameter symbol.
    pub fn sym(name: &str) -> Expr {
        Expr::new(Node::Sym(Arc::from(name)))
    }

    /// External function `name` of the time coordinate `arg`, differentiated
    /// `order` times.
    pub fn ext(name: &str, arg: &str, order: u32) -> Expr {
        Expr::new(Node::Ext {
            name: Arc::from(name),
            arg: Arc::from(arg),
            order,
        })
    }

    /// Numeric value if this expression is a constant.
    pub fn as_num(&self) -> Option<f64> {
        match &*self.0 {
            Node::Num(v) => Some(*v),
            _ => None,
        }
    }

    /// Symbol name if this expression is a bare symbol.
    pub fn as_sym(&self) -> Option<&str> {
        match &*self.0 {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(&*self.0, Node::Num(v) if *v == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(&*self.0, Node::Num(v) if *v == 1.0)
    }

    pub fn is_sum(&self) -> bool {
        matches!(&*self.0, Node::Add(_))
    }

    /// Split off a leading minus sign: `(-1, |e|)` when the leading numeric
    /// coefficient is negative, `(1, e)` otherwise.
    pub fn signed_magnitude(&self) -> (i32, Expr) {
        match leading_sign(self) {
            Sign::Negative => (-1, negate(self)),
            Sign::Positive => (1, self.clone()),
        }
    }

    /// Sum with canonicalization: flattening, constant folding, like-term
    /// collection, and a deterministic term order.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut constant = 0.0f64;
        let mut collected: BTreeMap<Expr, f64> = BTreeMap::new();
        let mut stack: Vec<Expr> = terms.into_iter().collect();
        stack.reverse();
        while let Some(term) = stack.pop() {
            match &*term.0 {
                Node::Add(inner) => stack.extend(inner.iter().rev().cloned()),
                Node::Num(v) => constant += v,
                _ => {
                    let (coeff, core) = split_coefficient(&term);
                    *collected.entry(core).or_insert(0.0) += coeff;
                }
            }
        }
        let mut out: Vec<Expr> = Vec::with_capacity(collected.len() + 1);
        if constant != 0.0 {
            out.push(Expr::num(constant));
        }
        for (core, coeff) in collected {
            if coeff == 0.0 {
                continue;
            }
            if coeff == 1.0 {
                out.push(core);
            } else {
                out.push(Expr::product([Expr::num(coeff), core]));
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().expect("len checked"),
            _ => {
                out.sort();
                Expr::new(Node::Add(out))
            }
        }
    }

    /// Product with canonicalization: flattening, coefficient folding, and
    /// collection of repeated bases into powers.
    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Expr {
        let mut coeff = 1.0f64;
        let mut bases: BTreeMap<Expr, Rational> = BTreeMap::new();
        let mut stack: Vec<Expr> = factors.into_iter().collect();
        stack.reverse();
        while let Some(factor) = stack.pop() {
            match &*factor.0 {
                Node::Mul(inner) => stack.extend(inner.iter().rev().cloned()),
                Node::Num(v) => coeff *= v,
                Node::Pow(base, e) => {
                    let entry = bases.entry(base.clone()).or_insert(Rational::ZERO);
                    *entry = entry.add(*e);
                }
                _ => {
                    let entry = bases.entry(factor.clone()).or_insert(Rational::ZERO);
                    *entry = entry.add(Rational::ONE);
                }
            }
        }
        if coeff == 0.0 {
            return Expr::zero();
        }
        let mut out: Vec<Expr> = Vec::with_capacity(bases.len() + 1);
        for (base, e) in bases {
            let p = Expr::pow(base, e);
            match &*p.0 {
                Node::Num(v) => coeff *= v,
                _ => out.push(p),
            }
        }
        if coeff == 0.0 {
            return Expr::zero();
        }
        // A numeric coefficient on a lone sum distributes, so that scalar
        // multiples of sums collect and cancel term by term.
        if coeff != 1.0 && out.len() == 1 {
            if let Node::Add(terms) = &*out[0].0 {
                let c = Expr::num(coeff);
                return Expr::sum(terms.iter().map(|t| Expr::product([c.clone(), t.clone()])));
            }
        }
        if coeff != 1.0 || out.is_empty() {
            out.push(Expr::num(coeff));
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().expect("len checked"),
            _ => {
                out.sort();
                Expr::new(Node::Mul(out))
            }
        }
    }

    /// Rational power `base^e`.
    ///
    /// Folds numeric bases where exact on the reals, distributes integer
    /// exponents over products, and merges `(x^a)^n -> x^(a n)` for integer
    /// `n` (the only always-valid merge on the reals).
    pub fn pow(base: Expr, e: Rational) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e == Rational::ONE {
            return base;
        }
        match &*base.0 {
            Node::Num(v) => {
                if e.is_integer() {
                    let n = e.numerator();
                    if *v == 0.0 && n < 0 {
                        return Expr::new(Node::Pow(base.clone(), e));
                    }
                    return Expr::num(v.powi(n.clamp(i32::MIN as i64, i32::MAX as i64) as i32));
                }
                if *v > 0.0 {
                    return Expr::num(v.powf(e.as_f64()));
                }
                if *v == 0.0 && e.numerator() > 0 {
                    return Expr::zero();
                }
                Expr::new(Node::Pow(base.clone(), e))
            }
            Node::Mul(factors) if e.is_integer() => {
                Expr::product(factors.iter().cloned().map(|f| Expr::pow(f, e)))
            }
            Node::Pow(inner, inner_e) if e.is_integer() => Expr::pow(inner.clone(), inner_e.mul(e)),
            Node::Exp(x) => Expr::exp(Expr::product([x.clone(), Expr::num(e.as_f64())])),
            _ => Expr::new(Node::Pow(base, e)),
        }
    }

    pub fn powi(base: Expr, n: i64) -> Expr {
        Expr::pow(base, Rational::int(n))
    }

    pub fn sin(arg: Expr) -> Expr {
        if let Some(v) = arg.as_num() {
            return Expr::num(v.sin());
        }
        match leading_sign(&arg) {
            Sign::Negative => Expr::product([Expr::num(-1.0), Expr::sin(negate(&arg))]),
            Sign::Positive => Expr::new(Node::Sin(arg)),
        }
    }

    pub fn cos(arg: Expr) -> Expr {
        if let Some(v) = arg.as_num() {
            return Expr::num(v.cos());
        }
        match leading_sign(&arg) {
            Sign::Negative => Expr::new(Node::Cos(negate(&arg))),
            Sign::Positive => Expr::new(Node::Cos(arg)),
        }
    }

    pub fn exp(arg: Expr) -> Expr {
        if let Some(v) = arg.as_num() {
            let r = v.exp();
            if r.is_finite() {
                return Expr::num(r);
            }
        }
        if let Node::Log(inner) = &*arg.0 {
            return inner.clone();
        }
        Expr::new(Node::Exp(arg))
    }

    pub fn log(arg: Expr) -> Expr {
        if let Some(v) = arg.as_num() {
            if v > 0.0 {
                return Expr::num(v.ln());
            }
        }
        if let Node::Exp(inner) = &*arg.0 {
            return inner.clone();
        }
        Expr::new(Node::Log(arg))
    }

    /// Exact symbolic partial derivative with respect to the symbol `x`.
    ///
    /// External functions respond to their recorded time symbol by
    /// incrementing the derivative order, and to every other symbol with 0.
    pub fn differentiate(&self, x: &str) -> Expr {
        match &*self.0 {
            Node::Num(_) => Expr::zero(),
            Node::Sym(s) => {
                if &**s == x {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Ext { name, arg, order } => {
                if &**arg == x {
                    Expr::ext(name, arg, order + 1)
                } else {
                    Expr::zero()
                }
            }
            Node::Add(terms) => Expr::sum(terms.iter().map(|t| t.differentiate(x))),
            Node::Mul(factors) => {
                let mut terms = Vec::with_capacity(factors.len());
                for (i, f) in factors.iter().enumerate() {
                    let df = f.differentiate(x);
                    if df.is_zero() {
                        continue;
                    }
                    let rest = factors
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, g)| g.clone());
                    terms.push(Expr::product(rest.chain([df])));
                }
                Expr::sum(terms)
            }
            Node::Pow(base, e) => {
                let db = base.differentiate(x);
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::product([
                    Expr::num(e.as_f64()),
                    Expr::pow(base.clone(), e.sub(Rational::ONE)),
                    db,
                ])
            }
            Node::Sin(a) => Expr::product([Expr::cos(a.clone()), a.differentiate(x)]),
            Node::Cos(a) => Expr::product([
                Expr::num(-1.0),
                Expr::sin(a.clone()),
                a.differentiate(x),
            ]),
            Node::Exp(a) => Expr::product([self.clone(), a.differentiate(x)]),
            Node::Log(a) => Expr::product([Expr::powi(a.clone(), -1), a.differentiate(x)]),
        }
    }

    /// Simultaneous substitution of symbols by expressions. The namespace is
    /// flat, so there is no capture to worry about.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        match &*self.0 {
            Node::Num(_) | Node::Ext { .. } => self.clone(),
            Node::Sym(s) => map.get(&**s).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(terms) => Expr::sum(terms.iter().map(|t| t.substitute(map))),
            Node::Mul(factors) => Expr::product(factors.iter().map(|f| f.substitute(map))),
            Node::Pow(base, e) => Expr::pow(base.substitute(map), *e),
            Node::Sin(a) => Expr::sin(a.substitute(map)),
            Node::Cos(a) => Expr::cos(a.substitute(map)),
            Node::Exp(a) => Expr::exp(a.substitute(map)),
            Node::Log(a) => Expr::log(a.substitute(map)),
        }
    }

    /// Replace every occurrence of the external function `name` by the given
    /// derivative family: order `k` becomes `derivs[k]`. Returns `None` when
    /// an occurrence exceeds the supplied orders.
    pub fn substitute_external(&self, name: &str, derivs: &[Expr]) -> Option<Expr> {
        match &*self.0 {
            Node::Num(_) | Node::Sym(_) => Some(self.clone()),
            Node::Ext { name: n, order, .. } => {
                if &**n == name {
                    derivs.get(*order as usize).cloned()
                } else {
                    Some(self.clone())
                }
            }
            Node::Add(terms) => terms
                .iter()
                .map(|t| t.substitute_external(name, derivs))
                .collect::<Option<Vec<_>>>()
                .map(Expr::sum),
            Node::Mul(factors) => factors
                .iter()
                .map(|f| f.substitute_external(name, derivs))
                .collect::<Option<Vec<_>>>()
                .map(Expr::product),
            Node::Pow(base, e) => base.substitute_external(name, derivs).map(|b| Expr::pow(b, *e)),
            Node::Sin(a) => a.substitute_external(name, derivs).map(Expr::sin),
            Node::Cos(a) => a.substitute_external(name, derivs).map(Expr::cos),
            Node::Exp(a) => a.substitute_external(name, derivs).map(Expr::exp),
            Node::Log(a) => a.substitute_external(name, derivs).map(Expr::log),
        }
    }

    /// Free symbols of the expression, excluding the reserved `pi` and
    /// excluding external function names (see [`Expr::externals`]).
    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |n| {
            if let Node::Sym(s) = n {
                if &**s != "pi" {
                    out.insert(s.to_string());
                }
            }
        });
        out
    }

    /// External functions used, mapped to (time symbol, highest derivative
    /// order encountered).
    pub fn externals(&self) -> BTreeMap<String, (String, u32)> {
        let mut out: BTreeMap<String, (String, u32)> = BTreeMap::new();
        self.visit(&mut |n| {
            if let Node::Ext { name, arg, order } = n {
                let entry = out
                    .entry(name.to_string())
                    .or_insert_with(|| (arg.to_string(), 0));
                entry.1 = entry.1.max(*order);
            }
        });
        out
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        let mut found = false;
        self.visit(&mut |n| {
            if let Node::Sym(s) = n {
                if &**s == name {
                    found = true;
                }
            }
        });
        found
    }

    /// Whether any external function node appears (any order).
    pub fn contains_external(&self) -> bool {
        let mut found = false;
        self.visit(&mut |n| {
            if matches!(n, Node::Ext { .. }) {
                found = true;
            }
        });
        found
    }

    fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(&self.0);
        match &*self.0 {
            Node::Num(_) | Node::Sym(_) | Node::Ext { .. } => {}
            Node::Add(xs) | Node::Mul(xs) => {
                for x in xs {
                    x.visit(f);
                }
            }
            Node::Pow(b, _) => b.visit(f),
            Node::Sin(a) | Node::Cos(a) | Node::Exp(a) | Node::Log(a) => a.visit(f),
        }
    }

    /// Number of nodes; used for expansion budgets.
    pub fn node_count(&self) -> usize {
        let mut n = 0usize;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Distribute products over sums and expand integer powers of sums,
    /// within a node budget. Expansion that would exceed the budget returns
    /// the canonical (unexpanded) input; the result is always equivalent.
    pub fn expand(&self) -> Expr {
        self.expand_budget(50_000)
    }

    fn expand_budget(&self, budget: usize) -> Expr {
        if self.node_count() > budget {
            return self.clone();
        }
        let out = match &*self.0 {
            Node::Add(terms) => Expr::sum(terms.iter().map(|t| t.expand_budget(budget))),
            Node::Mul(factors) => {
                let expanded: Vec<Expr> = factors.iter().map(|f| f.expand_budget(budget)).collect();
                distribute(&expanded, budget)
            }
            Node::Pow(base, e) => {
                let b = base.expand_budget(budget);
                if e.is_integer() && e.numerator() > 1 && e.numerator() <= 8 {
                    if let Node::Add(_) = &*b.0 {
                        let n = e.numerator() as usize;
                        let factors: Vec<Expr> = std::iter::repeat(b).take(n).collect();
                        return distribute(&factors, budget);
                    }
                }
                Expr::pow(b, *e)
            }
            Node::Sin(a) => Expr::sin(a.expand_budget(budget)),
            Node::Cos(a) => Expr::cos(a.expand_budget(budget)),
            Node::Exp(a) => Expr::exp(a.expand_budget(budget)),
            Node::Log(a) => Expr::log(a.expand_budget(budget)),
            _ => self.clone(),
        };
        if out.node_count() > budget {
            self.clone()
        } else {
            out
        }
    }
}

/// Multiply out a list of factors, distributing over any sums among them.
fn distribute(factors: &[Expr], budget: usize) -> Expr {
    let mut terms: Vec<Expr> = vec![Expr::one()];
    for f in factors {
        let addends: Vec<Expr> = match &*f.0 {
            Node::Add(ts) => ts.clone(),
            _ => vec![f.clone()],
        };
        if terms.len() * addends.len() > budget {
            return Expr::product(factors.iter().cloned());
        }
        let mut next = Vec::with_capacity(terms.len() * addends.len());
        for t in &terms {
            for a in &addends {
                next.push(Expr::product([t.clone(), a.clone()]));
            }
        }
        terms = next;
    }
    Expr::sum(terms)
}

/// Split a canonical term into (numeric coefficient, symbolic core) for
/// like-term collection. The core of a pure number is 1.
fn split_coefficient(term: &Expr) -> (f64, Expr) {
    match &*term.0 {
        Node::Num(v) => (*v, Expr::one()),
        Node::Mul(factors) => {
            if let Node::Num(v) = &*factors[0].0 {
                let rest = &factors[1..];
                let core = if rest.len() == 1 {
                    rest[0].clone()
                } else {
                    Expr::new(Node::Mul(rest.to_vec()))
                };
                (*v, core)
            } else {
                (1.0, term.clone())
            }
        }
        _ => (1.0, term.clone()),
    }
}

enum Sign {
    Positive,
    Negative,
}

/// Sign of the leading numeric coefficient, used to normalize the parity of
/// `sin`/`cos` arguments. Sums are left alone.
fn leading_sign(e: &Expr) -> Sign {
    match &*e.0 {
        Node::Num(v) if *v < 0.0 => Sign::Negative,
        Node::Mul(factors) => match &*factors[0].0 {
            Node::Num(v) if *v < 0.0 => Sign::Negative,
            _ => Sign::Positive,
        },
        _ => Sign::Positive,
    }
}

fn negate(e: &Expr) -> Expr {
    Expr::product([Expr::num(-1.0), e.clone()])
}

// Operator sugar so library code reads like the formulas it implements.

macro_rules! binary_ops {
    ($($trait:ident :: $method:ident => $ctor:expr),* $(,)?) => {
        $(
            impl std::ops::$trait for Expr {
                type Output = Expr;
                fn $method(self, rhs: Expr) -> Expr {
                    let f: fn(Expr, Expr) -> Expr = $ctor;
                    f(self, rhs)
                }
            }
            impl std::ops::$trait<&Expr> for Expr {
                type Output = Expr;
                fn $method(self, rhs: &Expr) -> Expr {
                    let f: fn(Expr, Expr) -> Expr = $ctor;
                    f(self, rhs.clone())
                }
            }
            impl std::ops::$trait<Expr> for &Expr {
                type Output = Expr;
                fn $method(self, rhs: Expr) -> Expr {
                    let f: fn(Expr, Expr) -> Expr = $ctor;
                    f(self.clone(), rhs)
                }
            }
            impl std::ops::$trait<&Expr> for &Expr {
                type Output = Expr;
                fn $method(self, rhs: &Expr) -> Expr {
                    let f: fn(Expr, Expr) -> Expr = $ctor;
                    f(self.clone(), rhs.clone())
                }
            }
        )*
    };
}

binary_ops! {
    Add::add => |a, b| Expr::sum([a, b]),
    Sub::sub => |a, b| Expr::sum([a, Expr::product([Expr::num(-1.0), b])]),
    Mul::mul => |a, b| Expr::product([a, b]),
    Div::div => |a, b| Expr::product([a, Expr::powi(b, -1)]),
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product([Expr::num(-1.0), self])
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product([Expr::num(-1.0), self.clone()])
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Expr {
        Expr::num(v)
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Expr {
        Expr::int(v)
    }
}

// Infix rendering with minimal parentheses; products are printed as a
// numerator/denominator pair so reports read like hand-written formulas.

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Precedence levels: 0 sum context, 1 product context, 2 power/atom context.
fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, prec: u8) -> fmt::Result {
    match &*e.0 {
        Node::Num(v) => write_num(f, *v, prec),
        Node::Sym(s) => write!(f, "{s}"),
        Node::Ext { name, arg, order } => {
            write!(f, "{name}")?;
            if *order <= 3 {
                for _ in 0..*order {
                    write!(f, "'")?;
                }
            } else {
                write!(f, "^({order})")?;
            }
            write!(f, "({arg})")
        }
        Node::Add(terms) => {
            let need_parens = prec >= 1;
            if need_parens {
                write!(f, "(")?;
            }
            for (i, t) in terms.iter().enumerate() {
                let (coeff, core) = split_coefficient(t);
                if i == 0 {
                    write_expr(f, t, 0)?;
                } else if coeff < 0.0 {
                    write!(f, " - ")?;
                    let flipped = if core.is_one() {
                        Expr::num(-coeff)
                    } else if coeff == -1.0 {
                        core
                    } else {
                        Expr::product([Expr::num(-coeff), core])
                    };
                    write_expr(f, &flipped, 1)?;
                } else {
                    write!(f, " + ")?;
                    write_expr(f, t, 1)?;
                }
            }
            if need_parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        Node::Mul(factors) => {
            let need_parens = prec >= 2;
            if need_parens {
                write!(f, "(")?;
            }
            write_product(f, factors)?;
            if need_parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        Node::Pow(base, e2) => {
            write_expr(f, base, 2)?;
            if e2.is_integer() && e2.numerator() >= 0 {
                write!(f, "^{}", e2.numerator())
            } else if e2.is_integer() {
                write!(f, "^({})", e2.numerator())
            } else {
                write!(f, "^({})", e2)
            }
        }
        Node::Sin(a) => write!(f, "sin({a})"),
        Node::Cos(a) => write!(f, "cos({a})"),
        Node::Exp(a) => write!(f, "exp({a})"),
        Node::Log(a) => write!(f, "log({a})"),
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, v: f64, prec: u8) -> fmt::Result {
    let parens = v < 0.0 && prec >= 1;
    if parens {
        write!(f, "(")?;
    }
    if v == v.trunc() && v.abs() < 1e15 {
        write!(f, "{}", v as i64)?;
    } else {
        write!(f, "{v}")?;
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

fn write_product(f: &mut fmt::Formatter<'_>, factors: &[Expr]) -> fmt::Result {
    let mut numer: Vec<Expr> = Vec::new();
    let mut denom: Vec<Expr> = Vec::new();
    for factor in factors {
        if let Node::Pow(base, e) = &*factor.0 {
            if e.numerator() < 0 {
                denom.push(Expr::pow(base.clone(), Rational::new(-e.numerator(), e.denominator())));
                continue;
            }
        }
        numer.push(factor.clone());
    }
    if numer.is_empty() {
        write!(f, "1")?;
    } else if numer.len() == 1 && numer[0].as_num() == Some(-1.0) && !denom.is_empty() {
        write!(f, "-1")?;
    } else {
        let skip_minus_one = numer.len() > 1 && numer[0].as_num() == Some(-1.0);
        let items: Vec<&Expr> = if skip_minus_one {
            write!(f, "-")?;
            numer.iter().skip(1).collect()
        } else {
            numer.iter().collect()
        };
        for (i, n) in items.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write_expr(f, n, 1)?;
        }
    }
    if denom.is_empty() {
        return Ok(());
    }
    write!(f, "/")?;
    if denom.len() == 1 {
        write_expr(f, &denom[0], 2)
    } else {
        write!(f, "(")?;
        for (i, d) in denom.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write_expr(f, d, 1)?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Expr {
        Expr::sym(name)
    }

    #[test]
    fn sums_collect_like_terms() {
        let q = v("q");
        let e = &q + &q + Expr::num(1.0) + Expr::num(2.0);
        assert_eq!(e.to_string(), "3 + 2*q");
        assert!((&q - &q).is_zero());
    }

    #[test]
    fn products_collect_exponents() {
        let x = v("x");
        let e = &x * &x * &x;
        assert_eq!(e.to_string(), "x^3");
        assert!((&x / &x).is_one());
        let mixed = Expr::num(2.0) * &x * Expr::num(3.0);
        assert_eq!(mixed.to_string(), "6*x");
    }

    #[test]
    fn division_renders_as_fraction() {
        let p = v("p");
        let m = v("m");
        let e = &p * &p / (Expr::num(2.0) * &m);
        assert_eq!(e.to_string(), "0.5*p^2/m");
    }

    #[test]
    fn power_rules_are_real_safe() {
        let x = v("x");
        // (x^2)^(1/2) must not collapse to x.
        let e = Expr::pow(Expr::powi(x.clone(), 2), Rational::new(1, 2));
        assert_eq!(e.to_string(), "x^2^(1/2)");
        // ((x^(1/2))^2 collapses: integer outer exponent.
        let e2 = Expr::powi(Expr::pow(x.clone(), Rational::new(1, 2)), 2);
        assert_eq!(e2, x);
    }

    #[test]
    fn derivative_power_rule() {
        let m = v("m");
        let vel = v("v");
        let lag = Expr::num(0.5) * &m * &vel * &vel;
        let d = lag.differentiate("v");
        assert_eq!(d, m * vel);
    }

    #[test]
    fn derivative_of_external_increments_order() {
        let lam = v("lambda");
        let r = v("r");
        let ell = Expr::ext("ell", "t", 0);
        let e = lam.clone() * (r - ell);
        let dt = e.differentiate("t");
        assert_eq!(dt, -(lam * Expr::ext("ell", "t", 1)));
        assert_eq!(dt.to_string(), "-lambda*ell'(t)");
    }

    #[test]
    fn mixed_partials_commute_structurally() {
        let q = v("q");
        let p = v("p");
        let s = v("s");
        let e = Expr::sin(&q * &p) + Expr::exp(&s * &q) * p.clone();
        let qp = e.differentiate("q").differentiate("p");
        let pq = e.differentiate("p").differentiate("q");
        assert!((qp - pq).is_zero());
    }

    #[test]
    fn substitution_is_simultaneous() {
        let a = v("a");
        let b = v("b");
        let mut map = BTreeMap::new();
        map.insert("a".to_string(), b.clone());
        map.insert("b".to_string(), a.clone());
        let e = (&a - &b).substitute(&map);
        assert_eq!(e, b - a);
    }

    #[test]
    fn substitute_cancels() {
        let p = v("p");
        let m = v("m");
        let e = &p / &m;
        let mut map = BTreeMap::new();
        map.insert("p".to_string(), &m * v("v"));
        assert_eq!(e.substitute(&map), v("v"));
    }

    #[test]
    fn external_family_substitution() {
        let e = Expr::ext("ell", "t", 1) * v("x");
        let derivs = [Expr::num(2.0), Expr::zero()];
        let out = e.substitute_external("ell", &derivs).unwrap();
        assert!(out.is_zero());
        let too_few = [Expr::num(2.0)];
        assert!(e.substitute_external("ell", &too_few).is_none());
    }

    #[test]
    fn expansion_distributes() {
        let a = v("a");
        let b = v("b");
        let e = Expr::powi(&a + &b, 2).expand();
        let expected = &a * &a + Expr::num(2.0) * &a * &b + &b * &b;
        assert_eq!(e, expected);
    }

    #[test]
    fn trig_parity_normalization() {
        let th = v("th");
        assert_eq!(Expr::sin(-&th).to_string(), "-sin(th)");
        assert_eq!(Expr::cos(-&th), Expr::cos(th));
    }

    #[test]
    fn display_subtraction() {
        let k = v("k");
        let q = v("q");
        let e = -(&k * &q) + Expr::ext("f", "t", 0);
        assert_eq!(e.to_string(), "f(t) - k*q");
    }

    #[test]
    fn free_symbols_and_externals() {
        let e = v("q") * Expr::ext("f", "t", 2) + Expr::pi();
        assert_eq!(
            e.free_symbols().into_iter().collect::<Vec<_>>(),
            vec!["q".to_string()]
        );
        let exts = e.externals();
        assert_eq!(exts["f"], ("t".to_string(), 2));
    }
}
