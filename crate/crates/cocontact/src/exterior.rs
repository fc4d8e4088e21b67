//! Exterior calculus over a chart: differential forms with symbolic
//! coefficients, vector fields, wedge products, exterior derivatives,
//! contractions, and Lie derivatives.
//!
//! A `k`-form is stored sparsely as a map from strictly increasing
//! coordinate index lists to coefficient expressions; zero coefficients are
//! never kept. All graded signs come from counting inversions against that
//! sorted order, so identities like `d(d w) = 0` hold exactly at the
//! symbolic level, not merely numerically.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::symlang::eval::Bindings;
use crate::symlang::zero::is_identically_zero;
use crate::symlang::Expr;

/// Vector field with one symbolic component per chart coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldExpr {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl VectorFieldExpr {
    pub fn zero(chart: &Arc<Chart>) -> VectorFieldExpr {
        VectorFieldExpr {
            chart: chart.clone(),
            comps: vec![Expr::zero(); chart.dim()],
        }
    }

    /// Coordinate basis field for the `i`-th coordinate.
    pub fn basis(chart: &Arc<Chart>, i: usize) -> VectorFieldExpr {
        let mut f = Self::zero(chart);
        f.comps[i] = Expr::one();
        f
    }

    pub fn from_components(chart: &Arc<Chart>, comps: Vec<Expr>) -> Result<VectorFieldExpr> {
        if comps.len() != chart.dim() {
            return Err(Error::ChartMismatch(format!(
                "{} component(s) for a chart of dimension {}",
                comps.len(),
                chart.dim()
            )));
        }
        Ok(VectorFieldExpr {
            chart: chart.clone(),
            comps,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    pub fn component_named(&self, name: &str) -> Option<&Expr> {
        self.chart.index_of(name).map(|i| &self.comps[i])
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn with_component(&self, i: usize, e: Expr) -> VectorFieldExpr {
        let mut out = self.clone();
        out.comps[i] = e;
        out
    }

    /// Map each component through `f`.
    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> VectorFieldExpr {
        VectorFieldExpr {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &VectorFieldExpr) -> Result<VectorFieldExpr> {
        self.check_chart(&other.chart)?;
        Ok(VectorFieldExpr {
            chart: self.chart.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, c: &Expr) -> VectorFieldExpr {
        self.map(|e| c * e)
    }

    /// Directional derivative of a scalar along the field.
    pub fn lie_scalar(&self, f: &Expr) -> Expr {
        let names = self.chart.names();
        Expr::sum(
            self.comps
                .iter()
                .enumerate()
                .map(|(i, x)| x * f.differentiate(&names[i])),
        )
    }

    pub fn evaluate(&self, b: &Bindings) -> Result<Vec<f64>> {
        self.comps.iter().map(|e| e.evaluate(b)).collect()
    }

    pub fn is_zero_field(&self) -> bool {
        self.comps.iter().all(is_identically_zero)
    }

    fn check_chart(&self, other: &Arc<Chart>) -> Result<()> {
        check_chart(&self.chart, other)
    }
}

impl fmt::Display for VectorFieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.comps.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let basis = format!("d/d{}", self.chart.name(i));
            if c.is_one() {
                write!(f, "{basis}")?;
            } else {
                write!(f, "{}*{basis}", paren_factor(c))?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Differential form of fixed degree with symbolic coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialForm {
    chart: Arc<Chart>,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

impl DifferentialForm {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> DifferentialForm {
        DifferentialForm {
            chart: chart.clone(),
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// Degree-zero form wrapping a scalar.
    pub fn scalar(chart: &Arc<Chart>, value: Expr) -> DifferentialForm {
        let mut f = Self::zero(chart, 0);
        f.insert(vec![], value);
        f
    }

    /// The coordinate differential `dx_i`.
    pub fn coordinate_differential(chart: &Arc<Chart>, i: usize) -> DifferentialForm {
        let mut f = Self::zero(chart, 1);
        f.insert(vec![i], Expr::one());
        f
    }

    /// One-form from a dense coefficient list in chart order.
    pub fn one_form(chart: &Arc<Chart>, coeffs: Vec<Expr>) -> Result<DifferentialForm> {
        if coeffs.len() != chart.dim() {
            return Err(Error::ChartMismatch(format!(
                "{} coefficient(s) for a chart of dimension {}",
                coeffs.len(),
                chart.dim()
            )));
        }
        let mut f = Self::zero(chart, 1);
        for (i, c) in coeffs.into_iter().enumerate() {
            f.insert(vec![i], c);
        }
        Ok(f)
    }

    /// Build from explicit `(indices, coefficient)` terms; indices must be
    /// strictly increasing and within the chart.
    pub fn from_terms(
        chart: &Arc<Chart>,
        degree: usize,
        terms: impl IntoIterator<Item = (Vec<usize>, Expr)>,
    ) -> Result<DifferentialForm> {
        if degree > chart.dim() {
            return Err(Error::DegreeOverflow {
                degree,
                dim: chart.dim(),
            });
        }
        let mut f = Self::zero(chart, degree);
        for (idx, c) in terms {
            if idx.len() != degree
                || idx.windows(2).any(|w| w[0] >= w[1])
                || idx.iter().any(|&i| i >= chart.dim())
            {
                return Err(Error::InvalidStructure(format!(
                    "index list {idx:?} is not a strictly increasing list of {degree} chart indices"
                )));
            }
            f.insert_add(idx, c);
        }
        Ok(f)
    }

    fn insert(&mut self, idx: Vec<usize>, c: Expr) {
        if !c.is_zero() {
            self.terms.insert(idx, c);
        }
    }

    fn insert_add(&mut self, idx: Vec<usize>, c: Expr) {
        let cur = self.terms.remove(&idx).unwrap_or_else(Expr::zero);
        self.insert(idx, cur + c);
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.terms.iter()
    }

    /// Coefficient on a strictly increasing index list; zero when absent.
    pub fn coefficient(&self, idx: &[usize]) -> Expr {
        self.terms.get(idx).cloned().unwrap_or_else(Expr::zero)
    }

    /// Dense coefficient list of a one-form, in chart order.
    pub fn one_form_coefficients(&self) -> Result<Vec<Expr>> {
        if self.degree != 1 {
            return Err(Error::InvalidStructure(format!(
                "expected a one-form, got degree {}",
                self.degree
            )));
        }
        Ok((0..self.chart.dim())
            .map(|i| self.coefficient(&[i]))
            .collect())
    }

    pub fn add(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        check_chart(&self.chart, &other.chart)?;
        if self.degree != other.degree {
            return Err(Error::InvalidStructure(format!(
                "cannot add forms of degree {} and {}",
                self.degree, other.degree
            )));
        }
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.insert_add(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        self.add(&other.scale(&-Expr::one()))
    }

    pub fn scale(&self, c: &Expr) -> DifferentialForm {
        let mut out = Self::zero(&self.chart, self.degree);
        for (idx, f) in &self.terms {
            out.insert(idx.clone(), c * f);
        }
        out
    }

    /// Map every coefficient through `f`, dropping the ones that map to zero.
    pub fn map_coefficients(&self, f: impl Fn(&Expr) -> Expr) -> DifferentialForm {
        let mut out = Self::zero(&self.chart, self.degree);
        for (idx, c) in &self.terms {
            out.insert(idx.clone(), f(c));
        }
        out
    }

    pub fn wedge(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        check_chart(&self.chart, &other.chart)?;
        let degree = self.degree + other.degree;
        let mut out = Self::zero(&self.chart, degree);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                if ia.iter().any(|i| ib.contains(i)) {
                    continue;
                }
                let mut merged: Vec<usize> = ia.iter().chain(ib.iter()).copied().collect();
                let sign = merge_sign(ia, ib);
                merged.sort_unstable();
                let c = if sign < 0 {
                    -(ca * cb)
                } else {
                    ca * cb
                };
                out.insert_add(merged, c);
            }
        }
        Ok(out)
    }

    pub fn exterior_derivative(&self) -> DifferentialForm {
        let names = self.chart.names();
        let mut out = Self::zero(&self.chart, self.degree + 1);
        for (idx, c) in &self.terms {
            for j in 0..self.chart.dim() {
                if idx.contains(&j) {
                    continue;
                }
                let dc = c.differentiate(&names[j]);
                if dc.is_zero() {
                    continue;
                }
                let before = idx.iter().filter(|&&i| i < j).count();
                let mut new_idx = idx.clone();
                new_idx.insert(before, j);
                let signed = if before % 2 == 1 { -dc } else { dc };
                out.insert_add(new_idx, signed);
            }
        }
        out
    }

    /// Contraction `i(X) w`, lowering the degree by one.
    pub fn interior_product(&self, x: &VectorFieldExpr) -> Result<DifferentialForm> {
        check_chart(&self.chart, x.chart())?;
        if self.degree == 0 {
            return Err(Error::ZeroDegreeContraction);
        }
        let mut out = Self::zero(&self.chart, self.degree - 1);
        for (idx, c) in &self.terms {
            for (pos, &i) in idx.iter().enumerate() {
                let comp = x.component(i);
                if comp.is_zero() {
                    continue;
                }
                let mut rest = idx.clone();
                rest.remove(pos);
                let term = comp * c;
                out.insert_add(rest, if pos % 2 == 1 { -term } else { term });
            }
        }
        Ok(out)
    }

    /// Pairing of a one-form with a vector field.
    pub fn pair(&self, x: &VectorFieldExpr) -> Result<Expr> {
        check_chart(&self.chart, x.chart())?;
        if self.degree != 1 {
            return Err(Error::InvalidStructure(format!(
                "pairing needs a one-form, got degree {}",
                self.degree
            )));
        }
        Ok(Expr::sum(
            self.terms.iter().map(|(idx, c)| c * x.component(idx[0])),
        ))
    }

    /// Lie derivative along `x` by the Cartan formula
    /// `L_X = i(X) d + d i(X)`; for scalars only the first term applies.
    pub fn lie_derivative(&self, x: &VectorFieldExpr) -> Result<DifferentialForm> {
        let outer = self.exterior_derivative().interior_product(x)?;
        if self.degree == 0 {
            return Ok(outer);
        }
        Ok(outer.add(&self.interior_product(x)?.exterior_derivative())?)
    }

    /// True when every coefficient vanishes identically.
    pub fn is_zero_form(&self) -> bool {
        self.terms.values().all(is_identically_zero)
    }

    /// Numeric coefficients at a point, paired with their index lists.
    pub fn coefficients_at(&self, b: &Bindings) -> Result<Vec<(Vec<usize>, f64)>> {
        self.terms
            .iter()
            .map(|(idx, c)| Ok((idx.clone(), c.evaluate(b)?)))
            .collect()
    }
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (idx, c)) in self.terms.iter().enumerate() {
            let basis = idx
                .iter()
                .map(|&i| format!("d{}", self.chart.name(i)))
                .collect::<Vec<_>>()
                .join("∧");
            let (sign, body) = signed_factor(c);
            if n == 0 {
                if sign < 0 {
                    write!(f, "-")?;
                }
            } else if sign < 0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if basis.is_empty() {
                write!(f, "{body}")?;
            } else if body == "1" {
                write!(f, "{basis}")?;
            } else {
                write!(f, "{body}*{basis}")?;
            }
        }
        Ok(())
    }
}

/// Differential of a scalar: the one-form with coefficients `de/dx_i`.
pub fn differential(chart: &Arc<Chart>, e: &Expr) -> DifferentialForm {
    let coeffs = chart
        .names()
        .iter()
        .map(|n| e.differentiate(n))
        .collect();
    DifferentialForm::one_form(chart, coeffs).expect("dense coefficients match the chart")
}

/// Matrix `M` of the flat isomorphism
/// `b(X) = (i(X) tau) tau + i(X) d eta + (i(X) eta) eta`
/// in the coordinate bases: `M[b][a]` multiplies `X^a` to give the `b`-th
/// covector component, so `M x` maps components of `X` to components of
/// `b(X)`.
pub fn flat_matrix(tau: &DifferentialForm, eta: &DifferentialForm) -> Result<Vec<Vec<Expr>>> {
    check_chart(tau.chart(), eta.chart())?;
    if tau.degree() != 1 || eta.degree() != 1 {
        return Err(Error::InvalidStructure(
            "flat map needs two one-forms".to_string(),
        ));
    }
    let dim = tau.chart().dim();
    let deta = eta.exterior_derivative();
    let mut m = vec![vec![Expr::zero(); dim]; dim];
    let tau_c: Vec<Expr> = (0..dim).map(|i| tau.coefficient(&[i])).collect();
    let eta_c: Vec<Expr> = (0..dim).map(|i| eta.coefficient(&[i])).collect();
    for (idx, c) in deta.terms() {
        let (a, b) = (idx[0], idx[1]);
        m[b][a] = &m[b][a] + c;
        m[a][b] = &m[a][b] - c;
    }
    for b in 0..dim {
        for a in 0..dim {
            let extra = &tau_c[a] * &tau_c[b] + &eta_c[a] * &eta_c[b];
            m[b][a] = &m[b][a] + extra;
        }
    }
    Ok(m)
}

/// The one-form `b(X)` for the structure `(tau, eta)`.
pub fn apply_flat(
    tau: &DifferentialForm,
    eta: &DifferentialForm,
    x: &VectorFieldExpr,
) -> Result<DifferentialForm> {
    let deta = eta.exterior_derivative();
    let mut out = tau.scale(&tau.pair(x)?);
    out = out.add(&deta.interior_product(x)?)?;
    out.add(&eta.scale(&eta.pair(x)?))
}

/// Volume candidate `tau ∧ eta ∧ (d eta)^n` for a chart of dimension
/// `2n + 2`.
pub fn volume_form(tau: &DifferentialForm, eta: &DifferentialForm) -> Result<DifferentialForm> {
    check_chart(tau.chart(), eta.chart())?;
    let n = tau.chart().half_dim();
    let deta = eta.exterior_derivative();
    let mut vol = tau.wedge(eta)?;
    for _ in 0..n {
        vol = vol.wedge(&deta)?;
    }
    Ok(vol)
}

fn check_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::ChartMismatch(format!(
            "charts {a} and {b} differ"
        )))
    }
}

/// Sign of sorting the concatenation of two strictly increasing lists:
/// `(-1)` to the number of pairs that appear out of order across the blocks.
fn merge_sign(a: &[usize], b: &[usize]) -> i32 {
    let mut inversions = 0usize;
    for &x in a {
        inversions += b.iter().filter(|&&y| y < x).count();
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

fn signed_factor(c: &Expr) -> (i32, String) {
    let (sign, mag) = c.signed_magnitude();
    (sign, paren_factor(&mag))
}

fn paren_factor(c: &Expr) -> String {
    let s = c.to_string();
    if c.is_sum() || s.starts_with('-') {
        format!("({s})")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlang::zero::{exprs_equal, random_polynomial};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn canonical() -> Arc<Chart> {
        Arc::new(Chart::canonical(1).unwrap())
    }

    fn canonical_eta(chart: &Arc<Chart>) -> DifferentialForm {
        // eta = ds - p dq
        let ds = DifferentialForm::coordinate_differential(chart, chart.index_of("s").unwrap());
        let dq = DifferentialForm::coordinate_differential(chart, chart.index_of("q").unwrap());
        ds.sub(&dq.scale(&Expr::sym("p"))).unwrap()
    }

    #[test]
    fn exterior_derivative_of_canonical_eta() {
        let chart = canonical();
        let deta = canonical_eta(&chart).exterior_derivative();
        // d eta = dq ∧ dp
        let q = chart.index_of("q").unwrap();
        let p = chart.index_of("p").unwrap();
        assert_eq!(deta.coefficient(&[q, p]), Expr::one());
        assert_eq!(deta.terms().count(), 1);
        assert_eq!(deta.to_string(), "dq∧dp");
    }

    #[test]
    fn d_squared_vanishes_on_random_one_forms() {
        let chart = canonical();
        let names = ["t", "q", "p", "s"];
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let coeffs: Vec<Expr> = (0..4)
                .map(|_| random_polynomial(&names, 2, 3, &mut rng))
                .collect();
            let w = DifferentialForm::one_form(&chart, coeffs).unwrap();
            let ddw = w.exterior_derivative().exterior_derivative();
            assert!(ddw.is_zero_form(), "d(dw) = {ddw}");
        }
    }

    #[test]
    fn wedge_is_graded_commutative() {
        let chart = canonical();
        let names = ["t", "q", "p", "s"];
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let a = DifferentialForm::one_form(
            &chart,
            (0..4)
                .map(|_| random_polynomial(&names, 2, 2, &mut rng))
                .collect(),
        )
        .unwrap();
        let b = DifferentialForm::one_form(
            &chart,
            (0..4)
                .map(|_| random_polynomial(&names, 2, 2, &mut rng))
                .collect(),
        )
        .unwrap();
        // One-forms anticommute.
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        assert!(ab.add(&ba).unwrap().is_zero_form());
        // A two-form commutes with a one-form.
        let ab_a = ab.wedge(&a).unwrap();
        let a_ab = a.wedge(&ab).unwrap();
        assert!(ab_a.sub(&a_ab).unwrap().is_zero_form());
    }

    #[test]
    fn interior_product_is_an_antiderivation() {
        let chart = canonical();
        let names = ["t", "q", "p", "s"];
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = DifferentialForm::one_form(
            &chart,
            (0..4)
                .map(|_| random_polynomial(&names, 2, 2, &mut rng))
                .collect(),
        )
        .unwrap();
        let b = DifferentialForm::one_form(
            &chart,
            (0..4)
                .map(|_| random_polynomial(&names, 2, 2, &mut rng))
                .collect(),
        )
        .unwrap();
        let x = VectorFieldExpr::from_components(
            &chart,
            (0..4)
                .map(|_| random_polynomial(&names, 1, 2, &mut rng))
                .collect(),
        )
        .unwrap();
        // i_X(a ∧ b) = (i_X a) b - a (i_X b) for one-forms a, b.
        let lhs = a.wedge(&b).unwrap().interior_product(&x).unwrap();
        let rhs = b
            .scale(&a.pair(&x).unwrap())
            .sub(&a.scale(&b.pair(&x).unwrap()))
            .unwrap();
        assert!(lhs.sub(&rhs).unwrap().is_zero_form());
    }

    #[test]
    fn flat_matrix_reproduces_the_canonical_table() {
        let chart = canonical();
        let tau =
            DifferentialForm::coordinate_differential(&chart, chart.index_of("t").unwrap());
        let eta = canonical_eta(&chart);
        let m = flat_matrix(&tau, &eta).unwrap();
        let p = Expr::sym("p");
        let dim = chart.dim();
        let col = |a: usize| -> Vec<Expr> { (0..dim).map(|b| m[b][a].clone()).collect() };
        // b(d/dt) = dt
        assert_eq!(col(0), vec![Expr::one(), Expr::zero(), Expr::zero(), Expr::zero()]);
        // b(d/dq) = dp - p ds + p^2 dq
        assert_eq!(
            col(1),
            vec![Expr::zero(), &p * &p, Expr::one(), -p.clone()]
        );
        // b(d/dp) = -dq
        assert_eq!(col(2), vec![Expr::zero(), -Expr::one(), Expr::zero(), Expr::zero()]);
        // b(d/ds) = eta
        assert_eq!(col(3), vec![Expr::zero(), -p, Expr::zero(), Expr::one()]);
    }

    #[test]
    fn apply_flat_matches_the_matrix() {
        let chart = canonical();
        let tau =
            DifferentialForm::coordinate_differential(&chart, chart.index_of("t").unwrap());
        let eta = canonical_eta(&chart);
        let m = flat_matrix(&tau, &eta).unwrap();
        let names = ["t", "q", "p", "s"];
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let x = VectorFieldExpr::from_components(
            &chart,
            (0..4)
                .map(|_| random_polynomial(&names, 1, 2, &mut rng))
                .collect(),
        )
        .unwrap();
        let direct = apply_flat(&tau, &eta, &x).unwrap();
        for b in 0..chart.dim() {
            let via_matrix = Expr::sum((0..chart.dim()).map(|a| &m[b][a] * x.component(a)));
            assert!(exprs_equal(&direct.coefficient(&[b]), &via_matrix));
        }
    }

    #[test]
    fn volume_form_is_nonzero_for_the_canonical_structure() {
        let chart = canonical();
        let tau =
            DifferentialForm::coordinate_differential(&chart, chart.index_of("t").unwrap());
        let eta = canonical_eta(&chart);
        let vol = volume_form(&tau, &eta).unwrap();
        // tau ∧ eta ∧ d eta = dt ∧ ds ∧ dq ∧ dp = -dt∧dq∧dp∧ds... sign from sorting.
        assert_eq!(vol.terms().count(), 1);
        let c = vol.coefficient(&[0, 1, 2, 3]);
        assert!(c.is_one() || c == -Expr::one());
        assert!(!vol.is_zero_form());
    }

    #[test]
    fn lie_derivative_satisfies_cartan_on_scalars() {
        let chart = canonical();
        let f = Expr::sym("q") * Expr::sym("p") + Expr::sin(Expr::sym("t"));
        let x = VectorFieldExpr::basis(&chart, 0)
            .add(&VectorFieldExpr::basis(&chart, 1).scale(&Expr::sym("p")))
            .unwrap();
        let lf = x.lie_scalar(&f);
        let expected = Expr::cos(Expr::sym("t")) + Expr::sym("p") * Expr::sym("p");
        assert!(exprs_equal(&lf, &expected));
        let form = DifferentialForm::scalar(&chart, f);
        let via_cartan = form.lie_derivative(&x).unwrap();
        assert!(exprs_equal(&via_cartan.coefficient(&[]), &expected));
    }
}
