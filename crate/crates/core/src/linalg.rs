//! Dense symmetric solves for the (p+1)-sized (or (p+1)d-sized) normal
//! equations: Cholesky first, partial-pivot LU as fallback, with a 1-norm
//! condition estimate gating against near-singular designs.

/// Condition number above which a design is treated as singular.
pub const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    Singular,
    IllConditioned(f64),
}

/// Factorized symmetric system, kept as an explicit inverse (k is small).
#[derive(Debug, Clone)]
pub struct SymSolve {
    pub inverse: Vec<f64>,
    pub cond: f64,
    k: usize,
}

impl SymSolve {
    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut out = vec![0.0; k];
        for i in 0..k {
            let row = &self.inverse[i * k..(i + 1) * k];
            out[i] = row.iter().zip(b).map(|(m, v)| m * v).sum();
        }
        out
    }

    /// x^T A^{-1} y.
    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let k = self.k;
        let mut acc = 0.0;
        for i in 0..k {
            let row = &self.inverse[i * k..(i + 1) * k];
            let t: f64 = row.iter().zip(y).map(|(m, v)| m * v).sum();
            acc += x[i] * t;
        }
        acc
    }
}

/// Factor the k x k symmetric matrix `a` (row-major) and bound its condition.
pub fn sym_solve(a: &[f64], k: usize) -> Result<SymSolve, SolveError> {
    debug_assert_eq!(a.len(), k * k);
    let inverse = match cholesky_inverse(a, k) {
        Some(inv) => inv,
        None => lu_inverse(a, k).ok_or(SolveError::Singular)?,
    };
    if inverse.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::Singular);
    }
    let cond = norm1(a, k) * norm1(&inverse, k);
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(SolveError::IllConditioned(cond));
    }
    Ok(SymSolve { inverse, cond, k })
}

fn norm1(a: &[f64], k: usize) -> f64 {
    (0..k)
        .map(|j| (0..k).map(|i| a[i * k + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn cholesky_inverse(a: &[f64], k: usize) -> Option<Vec<f64>> {
    let scale = (0..k).map(|i| a[i * k + i].abs()).fold(0.0, f64::max);
    if scale <= 0.0 || !scale.is_finite() {
        return None;
    }
    let tiny = scale * 1e-300;
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for m in 0..j {
                s -= l[i * k + m] * l[j * k + m];
            }
            if i == j {
                if s <= tiny {
                    return None;
                }
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    // invert by solving L L^T X = e_j column by column
    let mut inv = vec![0.0; k * k];
    let mut col = vec![0.0; k];
    for j in 0..k {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[j] = 1.0;
        // forward
        for i in 0..k {
            let mut s = col[i];
            for m in 0..i {
                s -= l[i * k + m] * col[m];
            }
            col[i] = s / l[i * k + i];
        }
        // backward
        for i in (0..k).rev() {
            let mut s = col[i];
            for m in (i + 1)..k {
                s -= l[m * k + i] * col[m];
            }
            col[i] = s / l[i * k + i];
        }
        for i in 0..k {
            inv[i * k + j] = col[i];
        }
    }
    Some(inv)
}

fn lu_inverse(a: &[f64], k: usize) -> Option<Vec<f64>> {
    // Gauss-Jordan with partial pivoting on an augmented [A | I]
    let mut m = vec![0.0; k * 2 * k];
    let w = 2 * k;
    for i in 0..k {
        m[i * w..i * w + k].copy_from_slice(&a[i * k..(i + 1) * k]);
        m[i * w + k + i] = 1.0;
    }
    for col in 0..k {
        let (pivot_row, pivot_val) = (col..k)
            .map(|r| (r, m[r * w + col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if pivot_val == 0.0 || !pivot_val.is_finite() {
            return None;
        }
        if pivot_row != col {
            for j in 0..w {
                m.swap(col * w + j, pivot_row * w + j);
            }
        }
        let p = m[col * w + col];
        for j in 0..w {
            m[col * w + j] /= p;
        }
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = m[r * w + col];
            if f != 0.0 {
                for j in 0..w {
                    m[r * w + j] -= f * m[col * w + j];
                }
            }
        }
    }
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        inv[i * k..(i + 1) * k].copy_from_slice(&m[i * w + k..i * w + 2 * k]);
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        // A = [[4,1],[1,3]], b = (1, 2) -> x = (1/11, 7/11)
        let s = sym_solve(&[4.0, 1.0, 1.0, 3.0], 2).unwrap();
        let x = s.apply(&[1.0, 2.0]);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
        assert!(s.cond < 10.0);
    }

    #[test]
    fn rejects_singular() {
        let err = sym_solve(&[1.0, 2.0, 2.0, 4.0], 2).unwrap_err();
        assert!(matches!(
            err,
            SolveError::Singular | SolveError::IllConditioned(_)
        ));
    }

    #[test]
    fn rejects_ill_conditioned() {
        let err = sym_solve(&[1.0, 0.0, 0.0, 1e-14], 2).unwrap_err();
        assert!(matches!(err, SolveError::IllConditioned(c) if c > COND_LIMIT));
    }

    #[test]
    fn lu_fallback_handles_indefinite() {
        // symmetric but indefinite: Cholesky fails, LU succeeds
        let s = sym_solve(&[0.0, 1.0, 1.0, 0.0], 2).unwrap();
        let x = s.apply(&[3.0, 5.0]);
        assert!((x[0] - 5.0).abs() < 1e-14);
        assert!((x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn quad_form_matches_apply() {
        let s = sym_solve(&[5.0, 1.0, 1.0, 2.0], 2).unwrap();
        let y = [2.0, -1.0];
        let x = [0.5, 4.0];
        let via_apply: f64 = s.apply(&y).iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((s.quad_form(&x, &y) - via_apply).abs() < 1e-14);
    }
}
