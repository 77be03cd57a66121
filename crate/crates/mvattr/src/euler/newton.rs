use crate::spectral::{ForcingField, SpectralOps, SpectralVelocity};

use super::step::residual_field;

pub(crate) struct NewtonOptions {
    pub max_iters: usize,
    /// Absolute dual-norm acceptance threshold (caller applies scaling).
    pub tol_abs: f64,
    pub linear_tol: f64,
    pub max_linear_iters: usize,
    pub shrink: f64,
}

pub(crate) struct NewtonOutcome {
    pub u: SpectralVelocity,
    pub residual: f64,
    pub iters: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum FailureKind {
    MaxIters,
    LineSearchStalled,
    NonFinite,
}

pub(crate) struct StartFailure {
    pub kind: FailureKind,
    pub residual: f64,
    pub iters: usize,
}

/// Damped inexact Newton for `F(u) = u + k nu A u + k B(u,u) - w - k f = 0`.
///
/// Each linear solve is GMRES on `J d = F(u)` with
/// `J = I + k nu A + k (B(., u) + B(u, .))`, preconditioned by the diagonal
/// Stokes part and run to a loose relative tolerance; a backtracking line
/// search guards the update. Progress is measured in the dual norm.
pub(crate) fn newton_solve(
    ops: &mut SpectralOps,
    k: f64,
    nu: f64,
    w: &SpectralVelocity,
    f: &ForcingField,
    u0: SpectralVelocity,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome, StartFailure> {
    let mut u = u0;
    let mut res = residual_field(ops, k, nu, &u, w, f);
    let mut rnorm = res.dual_norm();
    for iter in 0..=opts.max_iters {
        if !rnorm.is_finite() || !u.is_finite() {
            return Err(StartFailure { kind: FailureKind::NonFinite, residual: rnorm, iters: iter });
        }
        if rnorm <= opts.tol_abs {
            return Ok(NewtonOutcome { u, residual: rnorm, iters: iter });
        }
        if iter == opts.max_iters {
            break;
        }
        let ctx = ops.convection_ctx(&u);
        let dir = gmres(
            ops,
            |ops, v| {
                let mut jv = ops.convection_derivative(&ctx, v);
                jv.scale(k);
                jv.axpy(1.0, v);
                jv.axpy(k * nu, &v.stokes_apply());
                jv
            },
            &res,
            opts.linear_tol,
            opts.max_linear_iters,
            k,
            nu,
        );

        // Backtracking on the dual-norm residual with a mild decrease demand.
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut cand = u.clone();
            cand.axpy(-lambda, &dir);
            let cres = residual_field(ops, k, nu, &cand, w, f);
            let cnorm = cres.dual_norm();
            if cnorm.is_finite() && cnorm <= (1.0 - 1e-4 * lambda) * rnorm {
                accepted = Some((cand, cres, cnorm));
                break;
            }
            lambda *= opts.shrink;
        }
        match accepted {
            Some((cand, cres, cnorm)) => {
                u = cand;
                res = cres;
                rnorm = cnorm;
            }
            None => {
                return Err(StartFailure {
                    kind: FailureKind::LineSearchStalled,
                    residual: rnorm,
                    iters: iter,
                })
            }
        }
    }
    Err(StartFailure { kind: FailureKind::MaxIters, residual: rnorm, iters: opts.max_iters })
}

fn precondition(v: &mut SpectralVelocity, k: f64, nu: f64) {
    v.scale_by_symbol(|k2| 1.0 / (1.0 + k * nu * k2));
}

/// Left-preconditioned GMRES without restarts; the Krylov dimension is capped
/// by `max_iters`. Returns the best iterate even on stagnation (Newton's line
/// search copes with an imperfect direction).
fn gmres(
    ops: &mut SpectralOps,
    mut apply: impl FnMut(&mut SpectralOps, &SpectralVelocity) -> SpectralVelocity,
    b: &SpectralVelocity,
    rel_tol: f64,
    max_iters: usize,
    k: f64,
    nu: f64,
) -> SpectralVelocity {
    let mut r0 = b.clone();
    precondition(&mut r0, k, nu);
    let beta = r0.h_norm();
    if beta == 0.0 {
        return SpectralVelocity::zero(b.grid());
    }

    let mut basis: Vec<SpectralVelocity> = vec![r0.scaled(1.0 / beta)];
    // Hessenberg columns after Givens, plus rotation bookkeeping.
    let mut h_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];

    for j in 0..max_iters {
        let mut wv = apply(ops, &basis[j]);
        precondition(&mut wv, k, nu);
        // Modified Gram-Schmidt.
        let mut col = Vec::with_capacity(j + 2);
        for basis_vec in basis.iter() {
            let hij = wv.inner_h(basis_vec);
            wv.axpy(-hij, basis_vec);
            col.push(hij);
        }
        let hlast = wv.h_norm();
        col.push(hlast);

        // Apply accumulated Givens rotations to the new column.
        for i in 0..j {
            let (c, s) = (cs[i], sn[i]);
            let tmp = c * col[i] + s * col[i + 1];
            col[i + 1] = -s * col[i] + c * col[i + 1];
            col[i] = tmp;
        }
        let (c, s) = givens(col[j], col[j + 1]);
        let tmp = c * col[j] + s * col[j + 1];
        col[j] = tmp;
        col[j + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[j]);
        g[j] *= c;
        h_cols.push(col);

        let lucky = hlast <= 1e-14 * beta;
        if !lucky {
            basis.push(wv.scaled(1.0 / hlast));
        }
        if g[j + 1].abs() <= rel_tol * beta || lucky || j + 1 == max_iters {
            // Back-substitute y from the triangularized system.
            let m = j + 1;
            let mut y = vec![0.0; m];
            for i in (0..m).rev() {
                let mut acc = g[i];
                for (l, yl) in y.iter().enumerate().take(m).skip(i + 1) {
                    acc -= h_cols[l][i] * yl;
                }
                y[i] = acc / h_cols[i][i];
            }
            let mut x = SpectralVelocity::zero(b.grid());
            for (i, yi) in y.iter().enumerate() {
                x.axpy(*yi, &basis[i]);
            }
            return x;
        }
    }
    unreachable!("loop exits via the solve branch");
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}
