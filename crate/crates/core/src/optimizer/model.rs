//! Solver-agnostic linear model: bounded variables, linear rows, linear
//! minimization objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(j, a)| a * x[*j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StandardFormModel {
    pub name: String,
    pub vars: Vec<Variable>,
    pub rows: Vec<Constraint>,
    /// Dense objective coefficients, one per variable (minimize).
    pub objective: Vec<f64>,
}

impl StandardFormModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, integer: bool, cost: f64) -> usize {
        self.vars.push(Variable { name: name.into(), lb, ub, integer });
        self.objective.push(cost);
        self.vars.len() - 1
    }

    /// Adds a row, merging duplicate columns and dropping zero coefficients.
    pub fn add_row(&mut self, name: impl Into<String>, mut coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        coeffs.sort_by_key(|c| c.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (j, a) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|c| c.1 != 0.0);
        self.rows.push(Constraint { name: name.into(), coeffs: merged, sense, rhs });
        self.rows.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.vars.len() {
            return Err(Error::Invalid("objective length differs from variable count".into()));
        }
        for v in &self.vars {
            if v.lb > v.ub || v.lb.is_nan() || v.ub.is_nan() {
                return Err(Error::Invalid(format!("variable {}: lb {} > ub {}", v.name, v.lb, v.ub)));
            }
        }
        for r in &self.rows {
            if let Some((j, _)) = r.coeffs.iter().find(|(j, a)| *j >= self.vars.len() || !a.is_finite()) {
                return Err(Error::Invalid(format!("row {} references bad column {j}", r.name)));
            }
            if !r.rhs.is_finite() {
                return Err(Error::Invalid(format!("row {} has non-finite rhs", r.name)));
            }
        }
        Ok(())
    }

    /// Largest bound or row violation of `x`, plus integrality gap on integer columns.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &val)| {
                let b = (v.lb - val).max(val - v.ub).max(0.0);
                if v.integer { b.max((val - val.round()).abs()) } else { b }
            })
            .fold(0.0, f64::max);
        self.rows.iter().map(|r| r.violation(x)).fold(bounds, f64::max)
    }
}
