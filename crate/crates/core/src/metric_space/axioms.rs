use serde::Serialize;

use super::DistanceMatrix;

/// Point indices `(i, j, k)` of a triple that breaks an inequality on the
/// side `d(i, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Triple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub points: usize,
    pub non_negative: bool,
    pub triangle_holds: bool,
    pub triangle_violations: usize,
    /// First violation in `(i, j, k)` lexicographic scan order.
    pub first_violation: Option<Triple>,
    /// Largest `d(i,k) - d(i,j) - d(j,k)` over all triples.
    pub worst_excess: f64,
}

/// Checks non-negativity and `d(i,k) <= d(i,j) + d(j,k) + tol` for every
/// ordered triple of distinct points. Diagnostic only.
pub fn verify_metric_axioms(m: &DistanceMatrix, tol: f64) -> AxiomReport {
    let n = m.n();
    let mut violations = 0;
    let mut first = None;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        for k in (i + 1)..n {
            let dik = m.get(i, k);
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let excess = dik - (m.get(i, j) + m.get(j, k));
                worst = worst.max(excess);
                if excess > tol {
                    violations += 1;
                    first.get_or_insert(Triple { i, j, k });
                }
            }
        }
    }
    AxiomReport {
        points: n,
        non_negative: m.values().iter().all(|&v| v >= 0.0),
        triangle_holds: violations == 0,
        triangle_violations: violations,
        first_violation: first,
        worst_excess: if worst.is_finite() { worst } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UltrametricCheck {
    pub holds: bool,
    /// Witness with `d(i,k) > max(d(i,j), d(j,k)) + tol`.
    pub witness: Option<Triple>,
}

/// Checks the strong triangle inequality on every triple; stops at the first
/// violation.
pub fn verify_ultrametric(m: &DistanceMatrix, tol: f64) -> UltrametricCheck {
    let n = m.n();
    for i in 0..n {
        for k in (i + 1)..n {
            let dik = m.get(i, k);
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                if dik > m.get(i, j).max(m.get(j, k)) + tol {
                    return UltrametricCheck {
                        holds: false,
                        witness: Some(Triple { i, j, k }),
                    };
                }
            }
        }
    }
    UltrametricCheck {
        holds: true,
        witness: None,
    }
}
