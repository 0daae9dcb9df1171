//! Exact maximization over the linear weights for fixed term shapes.
//!
//! With every shape fixed, `L(c) = Σ_i log Σ_k c_k φ_ik − Σ_k c_k I_k` is
//! concave in the weights `c ≥ 0`. Newton steps handle the interior and
//! multiplicative EM steps handle weights heading to zero.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::likelihood::{loglik_from_parts, TermParts};
use crate::error::Result;

const MAX_ITER: usize = 1000;

fn objective(parts: &[Arc<TermParts>], c: &[f64]) -> f64 {
    loglik_from_parts(parts, c).unwrap_or(f64::NEG_INFINITY)
}

/// Maximizes over the weights starting from `init`; returns the weights and
/// the log-likelihood there. The result is never worse than `init`.
pub(crate) fn maximize_weights(parts: &[Arc<TermParts>], init: &[f64]) -> Result<(Vec<f64>, f64)> {
    let k = parts.len();
    let n = parts[0].at_events.len() as f64;
    let movable: Vec<bool> = parts.iter().map(|p| p.integral > 0.0).collect();
    let start_ll = objective(parts, init);
    let mut c: Vec<f64> = init.to_vec();
    for j in 0..k {
        if movable[j] && !(c[j] > 0.0) {
            c[j] = n / (k as f64 * parts[j].integral);
        }
    }
    let mut ll = objective(parts, &c);
    if ll < start_ll {
        c = init.to_vec();
        ll = start_ll;
    }
    let mut quiet = 0;
    for _ in 0..MAX_ITER {
        let lam: Vec<f64> = (0..parts[0].at_events.len())
            .map(|i| {
                parts
                    .iter()
                    .zip(&c)
                    .map(|(p, cj)| cj * p.at_events[i])
                    .sum()
            })
            .collect();
        let mut g = DVector::zeros(k);
        let mut h = DMatrix::zeros(k, k);
        for (i, &l) in lam.iter().enumerate() {
            if !(l > 0.0) {
                continue;
            }
            for a in 0..k {
                let ea = parts[a].at_events[i] / l;
                g[a] += ea;
                for b in a..k {
                    h[(a, b)] += ea * parts[b].at_events[i] / l;
                }
            }
        }
        for a in 0..k {
            g[a] -= parts[a].integral;
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        let mut next: Option<(Vec<f64>, f64)> = None;

        // Newton on the movable weights, kept strictly positive
        let idx: Vec<usize> = (0..k).filter(|&j| movable[j]).collect();
        let hs = DMatrix::from_fn(idx.len(), idx.len(), |a, b| h[(idx[a], idx[b])]);
        let gs = DVector::from_fn(idx.len(), |a, _| g[idx[a]]);
        if let Some(chol) = hs.cholesky() {
            let d = chol.solve(&gs);
            let decrement: f64 = gs.dot(&d);
            if decrement.abs() < 1e-13 * n.max(1.0) {
                break;
            }
            let mut t: f64 = 1.0;
            for (a, &j) in idx.iter().enumerate() {
                if d[a] < 0.0 {
                    t = t.min(0.99 * c[j] / -d[a]);
                }
            }
            for _ in 0..30 {
                let mut trial = c.clone();
                for (a, &j) in idx.iter().enumerate() {
                    trial[j] += t * d[a];
                }
                let tl = objective(parts, &trial);
                if tl > ll {
                    next = Some((trial, tl));
                    break;
                }
                t *= 0.5;
            }
        }
        // EM step when Newton stalls at the boundary
        let em: Vec<f64> = (0..k)
            .map(|j| {
                if movable[j] {
                    c[j] * (g[j] + parts[j].integral) / parts[j].integral
                } else {
                    c[j]
                }
            })
            .collect();
        let em_ll = objective(parts, &em);
        match next {
            Some((_, nl)) if nl >= em_ll => {}
            _ if em_ll > ll => next = Some((em, em_ll)),
            _ => {}
        }
        let Some((nc, nl)) = next else { break };
        let gain = nl - ll;
        c = nc;
        ll = nl;
        if gain <= 1e-13 * ll.abs().max(1.0) {
            quiet += 1;
            if quiet >= 5 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    let ll = loglik_from_parts(parts, &c)?;
    Ok((c, ll))
}
