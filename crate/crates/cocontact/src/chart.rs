//! Coordinate charts.
//!
//! A chart fixes the ordered coordinate names and the role of each: one time
//! coordinate, one action coordinate, position/velocity or position/momentum
//! pairs, and optionally multiplier pairs added when holonomic constraints
//! enlarge a velocity chart. State vectors, matrices, and CSV columns all
//! follow chart order.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// What a coordinate means to the mechanics built on the chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Time,
    Position,
    Velocity,
    Momentum,
    Multiplier,
    MultiplierVelocity,
    Action,
}

#[derive(Clone, Debug, PartialEq)]
struct Coordinate {
    name: String,
    role: Role,
}

/// Ordered, validated coordinate system.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    coords: Vec<Coordinate>,
}

const RESERVED: [&str; 5] = ["pi", "sin", "cos", "exp", "log"];

impl Chart {
    /// Build a chart from `(name, role)` pairs, validating the invariants:
    /// unique unreserved names, exactly one time and one action coordinate,
    /// as many positions as velocities or momenta (never both kinds), and as
    /// many multipliers as multiplier velocities.
    pub fn new(coords: Vec<(String, Role)>) -> Result<Chart> {
        let mut seen = BTreeSet::new();
        let mut count = [0usize; 7];
        for (name, role) in &coords {
            if RESERVED.contains(&name.as_str()) {
                return Err(Error::Chart(format!("`{name}` is a reserved name")));
            }
            if name.is_empty()
                || !name
                    .chars()
                    .next()
                    .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            {
                return Err(Error::Chart(format!(
                    "`{name}` is not a valid coordinate name"
                )));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::Chart(format!("duplicate coordinate `{name}`")));
            }
            count[*role as usize] += 1;
        }
        let n = |r: Role| count[r as usize];
        if n(Role::Time) != 1 {
            return Err(Error::Chart("exactly one time coordinate required".into()));
        }
        if n(Role::Action) != 1 {
            return Err(Error::Chart(
                "exactly one action coordinate required".into(),
            ));
        }
        if n(Role::Velocity) > 0 && n(Role::Momentum) > 0 {
            return Err(Error::Chart(
                "velocity and momentum coordinates cannot be mixed".into(),
            ));
        }
        let fibre = n(Role::Velocity) + n(Role::Momentum);
        if n(Role::Position) != fibre {
            return Err(Error::Chart(format!(
                "{} position(s) but {} velocity/momentum coordinate(s)",
                n(Role::Position),
                fibre
            )));
        }
        if n(Role::Position) == 0 {
            return Err(Error::Chart("at least one position pair required".into()));
        }
        if n(Role::Multiplier) != n(Role::MultiplierVelocity) {
            return Err(Error::Chart(format!(
                "{} multiplier(s) but {} multiplier velocity coordinate(s)",
                n(Role::Multiplier),
                n(Role::MultiplierVelocity)
            )));
        }
        if n(Role::Multiplier) > 0 && n(Role::Velocity) == 0 {
            return Err(Error::Chart(
                "multiplier pairs require a velocity chart".into(),
            ));
        }
        Ok(Chart {
            coords: coords
                .into_iter()
                .map(|(name, role)| Coordinate { name, role })
                .collect(),
        })
    }

    /// Velocity chart `(t, q..., v..., s)` with default time and action names.
    pub fn lagrangian(positions: &[&str], velocities: &[&str]) -> Result<Chart> {
        Self::fibred(positions, velocities, Role::Velocity)
    }

    /// Momentum chart `(t, q..., p..., s)` with default time and action names.
    pub fn hamiltonian(positions: &[&str], momenta: &[&str]) -> Result<Chart> {
        Self::fibred(positions, momenta, Role::Momentum)
    }

    fn fibred(positions: &[&str], fibre: &[&str], role: Role) -> Result<Chart> {
        let mut coords = vec![("t".to_string(), Role::Time)];
        coords.extend(positions.iter().map(|q| (q.to_string(), Role::Position)));
        coords.extend(fibre.iter().map(|v| (v.to_string(), role)));
        coords.push(("s".to_string(), Role::Action));
        Chart::new(coords)
    }

    /// Canonical momentum chart with `n` degrees of freedom: `(t, q, p, s)`
    /// for `n = 1`, numbered `q1..qn, p1..pn` otherwise.
    pub fn canonical(n: usize) -> Result<Chart> {
        if n == 1 {
            Chart::hamiltonian(&["q"], &["p"])
        } else {
            let qs: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
            let ps: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
            Chart::hamiltonian(
                &qs.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                &ps.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            )
        }
    }

    /// Enlarge a velocity chart with multiplier pairs, preserving the order
    /// `(t, q..., lambda..., v..., v_lambda..., s)`.
    pub fn with_multipliers(&self, multipliers: &[&str]) -> Result<Chart> {
        if self.momentum_chart() {
            return Err(Error::Chart(
                "multiplier pairs require a velocity chart".into(),
            ));
        }
        let mut coords: Vec<(String, Role)> = vec![(self.time_name().to_string(), Role::Time)];
        for i in self.positions() {
            coords.push((self.coords[i].name.clone(), Role::Position));
        }
        for m in multipliers {
            coords.push((m.to_string(), Role::Position));
        }
        for i in self.fibres() {
            coords.push((self.coords[i].name.clone(), Role::Velocity));
        }
        for m in multipliers {
            coords.push((format!("v_{m}"), Role::Velocity));
        }
        coords.push((self.action_name().to_string(), Role::Action));
        // Reclassify the appended pairs as multiplier pairs.
        let mut chart = Chart::new(coords)?;
        for c in chart.coords.iter_mut() {
            if multipliers.contains(&c.name.as_str()) {
                c.role = Role::Multiplier;
            } else if let Some(base) = c.name.strip_prefix("v_") {
                if multipliers.contains(&base) {
                    c.role = Role::MultiplierVelocity;
                }
            }
        }
        Ok(chart)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Degrees of freedom: position pairs of every kind.
    pub fn dof(&self) -> usize {
        self.positions().len() + self.multipliers().len()
    }

    pub fn names(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.name.clone()).collect()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.coords[i].name
    }

    pub fn role(&self, i: usize) -> Role {
        self.coords[i].role
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    fn role_indices(&self, role: Role) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.role(i) == role).collect()
    }

    pub fn time_index(&self) -> usize {
        self.role_indices(Role::Time)[0]
    }

    pub fn action_index(&self) -> usize {
        self.role_indices(Role::Action)[0]
    }

    pub fn time_name(&self) -> &str {
        self.name(self.time_index())
    }

    pub fn action_name(&self) -> &str {
        self.name(self.action_index())
    }

    /// Indices of plain position coordinates, in chart order.
    pub fn positions(&self) -> Vec<usize> {
        self.role_indices(Role::Position)
    }

    /// Indices of plain velocity or momentum coordinates, in chart order.
    pub fn fibres(&self) -> Vec<usize> {
        let mut v = self.role_indices(Role::Velocity);
        if v.is_empty() {
            v = self.role_indices(Role::Momentum);
        }
        v
    }

    pub fn multipliers(&self) -> Vec<usize> {
        self.role_indices(Role::Multiplier)
    }

    pub fn multiplier_velocities(&self) -> Vec<usize> {
        self.role_indices(Role::MultiplierVelocity)
    }

    /// Base/fibre index pairs in block order: plain pairs first, then
    /// multiplier pairs.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .positions()
            .into_iter()
            .zip(self.fibres())
            .collect();
        out.extend(
            self.multipliers()
                .into_iter()
                .zip(self.multiplier_velocities()),
        );
        out
    }

    pub fn momentum_chart(&self) -> bool {
        self.coords.iter().any(|c| c.role == Role::Momentum)
    }

    pub fn velocity_chart(&self) -> bool {
        !self.momentum_chart()
    }

    /// Degrees of freedom `n` for a chart of dimension `2n + 2`.
    pub fn half_dim(&self) -> usize {
        debug_assert_eq!(self.dim() % 2, 0);
        self.dim() / 2 - 1
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c.name)?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_chart_layout() {
        let c = Chart::canonical(2).unwrap();
        assert_eq!(c.to_string(), "(t, q1, q2, p1, p2, s)");
        assert_eq!(c.dim(), 6);
        assert_eq!(c.half_dim(), 2);
        assert_eq!(c.pairs(), vec![(1, 3), (2, 4)]);
        assert!(c.momentum_chart());
    }

    #[test]
    fn multiplier_enlargement_preserves_block_order() {
        let base = Chart::lagrangian(&["r", "th"], &["v_r", "v_th"]).unwrap();
        let big = base.with_multipliers(&["lambda"]).unwrap();
        assert_eq!(
            big.to_string(),
            "(t, r, th, lambda, v_r, v_th, v_lambda, s)"
        );
        assert_eq!(big.role(3), Role::Multiplier);
        assert_eq!(big.role(6), Role::MultiplierVelocity);
        assert_eq!(big.pairs(), vec![(1, 4), (2, 5), (3, 6)]);
        assert_eq!(big.dof(), 3);
    }

    #[test]
    fn rejects_mixed_fibres() {
        let err = Chart::new(vec![
            ("t".into(), Role::Time),
            ("q".into(), Role::Position),
            ("x".into(), Role::Position),
            ("v".into(), Role::Velocity),
            ("p".into(), Role::Momentum),
            ("s".into(), Role::Action),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Chart(_)));
    }

    #[test]
    fn rejects_reserved_and_duplicate_names() {
        assert!(Chart::lagrangian(&["pi"], &["v"]).is_err());
        assert!(Chart::lagrangian(&["q"], &["q"]).is_err());
    }
}
