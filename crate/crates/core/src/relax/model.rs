use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub usize);

/// Affine expression `Σ coef·x + constant`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn term(v: VarId, coef: f64) -> Self {
        LinExpr { terms: vec![(v, coef)], constant: 0.0 }
    }

    pub fn add_term(&mut self, v: VarId, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((v, coef));
        }
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>() + self.constant
    }

    /// Sums duplicate terms and drops zero coefficients, ordered by variable.
    pub fn compact(&self) -> LinExpr {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        LinExpr { terms: out, constant: self.constant }
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl<T: Into<LinExpr>> Add<T> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: T) -> LinExpr {
        let rhs = rhs.into();
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
        self
    }
}

impl<T: Into<LinExpr>> Sub<T> for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: T) -> LinExpr {
        self + (-rhs.into())
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, k: f64) -> LinExpr {
        for t in &mut self.terms {
            t.1 *= k;
        }
        self.constant *= k;
        self
    }
}

impl Mul<f64> for VarId {
    type Output = LinExpr;
    fn mul(self, k: f64) -> LinExpr {
        LinExpr::term(self, k)
    }
}

impl<T: Into<LinExpr>> Add<T> for VarId {
    type Output = LinExpr;
    fn add(self, rhs: T) -> LinExpr {
        LinExpr::from(self) + rhs
    }
}

impl<T: Into<LinExpr>> Sub<T> for VarId {
    type Output = LinExpr;
    fn sub(self, rhs: T) -> LinExpr {
        LinExpr::from(self) - rhs
    }
}

/// Bounds serialize infinite values as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    #[serde(with = "lower_bound")]
    pub lower: f64,
    #[serde(with = "upper_bound")]
    pub upper: f64,
}

macro_rules! nullable_bound {
    ($module:ident, $missing:expr) => {
        mod $module {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                if v.is_finite() {
                    s.serialize_some(v)
                } else {
                    s.serialize_none()
                }
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                Ok(Option::<f64>::deserialize(d)?.unwrap_or($missing))
            }
        }
    };
}

nullable_bound!(lower_bound, f64::NEG_INFINITY);
nullable_bound!(upper_bound, f64::INFINITY);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

/// Row `Σ coef·x  sense  rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// Cone `‖(lhs_1, …, lhs_k)‖₂ ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocConstraint {
    pub name: String,
    pub lhs: Vec<LinExpr>,
    pub rhs: LinExpr,
}

/// Solver-independent second-order-cone program with a linear objective,
/// to be minimized.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicModel {
    pub variables: Vec<Variable>,
    pub linear: Vec<LinearConstraint>,
    pub cones: Vec<SocConstraint>,
    pub objective: LinExpr,
}

impl ConicModel {
    pub fn new() -> Self {
        ConicModel::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.variables.push(Variable { name: name.into(), lower, upper });
        VarId(self.variables.len() - 1)
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Adds `expr sense rhs`; the expression's constant moves to the right.
    pub fn add_linear(&mut self, name: impl Into<String>, expr: LinExpr, sense: RowSense, rhs: f64) {
        let expr = expr.compact();
        self.linear.push(LinearConstraint { name: name.into(), terms: expr.terms, sense, rhs: rhs - expr.constant });
    }

    pub fn add_soc(&mut self, name: impl Into<String>, lhs: Vec<LinExpr>, rhs: LinExpr) {
        let lhs = lhs.iter().map(LinExpr::compact).collect();
        self.cones.push(SocConstraint { name: name.into(), lhs, rhs: rhs.compact() });
    }

    /// Adds `Σ x_i² ≤ u·v` with `u, v ≥ 0` in standard cone form.
    pub fn add_rotated_soc(&mut self, name: impl Into<String>, x: Vec<LinExpr>, u: LinExpr, v: LinExpr) {
        let mut lhs = x;
        lhs.push((u.clone() - v.clone()) * 0.5);
        self.add_soc(name, lhs, (u + v) * 0.5);
    }

    pub fn set_objective(&mut self, objective: LinExpr) {
        self.objective = objective.compact();
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn fix(&mut self, v: VarId, value: f64) {
        self.variables[v.0].lower = value;
        self.variables[v.0].upper = value;
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        for var in &self.variables {
            if var.lower > var.upper || var.lower.is_nan() || var.upper.is_nan() {
                return Err(Error::Build(format!(
                    "variable {} has bounds [{}, {}]",
                    var.name, var.lower, var.upper
                )));
            }
        }
        let check = |terms: &[(VarId, f64)], what: &str| -> Result<()> {
            for &(v, c) in terms {
                if v.0 >= n {
                    return Err(Error::Build(format!("{what} references missing variable {}", v.0)));
                }
                if !c.is_finite() {
                    return Err(Error::Build(format!("{what} has non-finite coefficient")));
                }
            }
            Ok(())
        };
        for row in &self.linear {
            check(&row.terms, &row.name)?;
            if !row.rhs.is_finite() {
                return Err(Error::Build(format!("{} has non-finite right-hand side", row.name)));
            }
        }
        for cone in &self.cones {
            for e in cone.lhs.iter().chain(std::iter::once(&cone.rhs)) {
                check(&e.terms, &cone.name)?;
            }
        }
        check(&self.objective.terms, "objective")
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Largest violation of any bound, row or cone at `x` (zero when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (var, &v) in self.variables.iter().zip(x) {
            worst = worst.max(var.lower - v).max(v - var.upper);
        }
        for row in &self.linear {
            let lhs: f64 = row.terms.iter().map(|&(v, c)| c * x[v.0]).sum();
            let r = match row.sense {
                RowSense::Eq => (lhs - row.rhs).abs(),
                RowSense::Le => lhs - row.rhs,
                RowSense::Ge => row.rhs - lhs,
            };
            worst = worst.max(r);
        }
        for cone in &self.cones {
            let norm = cone.lhs.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(norm - cone.rhs.eval(x));
        }
        worst
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions_compose_and_compact() {
        let (x, y) = (VarId(0), VarId(1));
        let e = (x * 2.0 + y - x + 3.0).compact();
        assert_eq!(e.terms, vec![(x, 1.0), (y, 1.0)]);
        assert_eq!(e.constant, 3.0);
        assert_eq!(e.eval(&[1.0, 2.0]), 6.0);
        assert!((x - x).compact().terms.is_empty());
    }

    #[test]
    fn rotated_cone_matches_product() {
        let mut m = ConicModel::new();
        let x = m.add_free("x");
        let u = m.add_var("u", 0.0, f64::INFINITY);
        let v = m.add_var("v", 0.0, f64::INFINITY);
        m.add_rotated_soc("r", vec![x.into()], u.into(), v.into());
        assert!(m.max_violation(&[2.0, 1.0, 4.0]) <= 1e-15);
        assert!(m.max_violation(&[2.0, 1.0, 3.9]) > 0.0);
    }

    #[test]
    fn validation_catches_inverted_bounds() {
        let mut m = ConicModel::new();
        m.add_var("v", 1.1, 0.9);
        m.add_free("free");
        assert!(matches!(m.validate(), Err(Error::Build(_))));
        let json = m.to_json().unwrap();
        let back: ConicModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
