// Exact or prox-linear solution of one block subproblem
//
//   argmin f(x) + ρ/2‖A x − b‖² + ½‖x − x_prev‖²_P
//
// with a factorization cache that survives across iterations.

use alloc::format;
use alloc::vec::Vec;

use crate::error::Error;
use crate::linalg::{self, Cholesky, Matrix};
use crate::objective::BlockFunction;
use crate::prox::BlockProx;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Route {
    /// `P = τI − ρAᵀA`: one prox step of `f` with step `1/τ`.
    ProxLinear,
    /// Quadratic or zero `f`: solve the SPD normal equations.
    Normal,
    /// `ρAᵀA + P = qI`: one prox step of `f` with step `1/q`.
    Isotropic,
}

#[derive(Debug, Clone)]
pub(crate) struct SubproblemSolver {
    block: usize,
    route: Option<Route>,
    key: Option<(f64, BlockProx)>,
    chol: Option<Cholesky>,
    ctd: Option<Vec<f64>>,
    /// `s` with `AᵀA = sI`, when it holds exactly.
    gram_scalar: Option<f64>,
}

fn gram_scalar(a: &Matrix) -> Option<f64> {
    let g = a.gram();
    let s = g.get(0, 0);
    for j in 0..g.cols() {
        for i in 0..g.rows() {
            let want = if i == j { s } else { 0.0 };
            if g.get(i, j) != want {
                return None;
            }
        }
    }
    Some(s)
}

impl SubproblemSolver {
    pub(crate) fn new(block: usize, f: &BlockFunction, a: &Matrix) -> Self {
        SubproblemSolver {
            block,
            route: None,
            key: None,
            chol: None,
            ctd: match f {
                BlockFunction::Quadratic { c, d } => Some(c.tr_mul_vec(d)),
                _ => None,
            },
            gram_scalar: gram_scalar(a),
        }
    }

    fn route_for(&self, f: &BlockFunction, prox: &BlockProx, rho: f64) -> Result<Route, Error> {
        if matches!(prox, BlockProx::ProxLinear(_)) {
            return Ok(Route::ProxLinear);
        }
        if matches!(f, BlockFunction::Quadratic { .. } | BlockFunction::Zero) {
            return Ok(Route::Normal);
        }
        let iso = match prox {
            BlockProx::None | BlockProx::Standard(_) => self.gram_scalar.is_some_and(|s| rho * s + prox.tau().unwrap_or(0.0) > 0.0),
            _ => false,
        };
        if iso {
            return Ok(Route::Isotropic);
        }
        Err(Error::config(format!(
            "block {}: no exact oracle for a {:?} objective with this proximal term; use a prox-linear P_i or scalar blocks",
            self.block,
            f.kind()
        )))
    }

    /// Picks the route and builds any factorization. Called before the
    /// first iteration so configuration errors surface early.
    pub(crate) fn prepare(&mut self, f: &BlockFunction, a: &Matrix, prox: &BlockProx, rho: f64) -> Result<(), Error> {
        let route = self.route_for(f, prox, rho)?;
        self.route = Some(route);
        let key = (rho, prox.clone());
        if self.key.as_ref() == Some(&key) {
            return Ok(());
        }
        self.chol = match route {
            Route::Normal => {
                let mut m = a.gram().scaled(rho);
                if let BlockFunction::Quadratic { c, .. } = f {
                    m.add_scaled(1.0, &c.gram());
                }
                match prox {
                    BlockProx::Standard(t) => m.add_diag(*t),
                    BlockProx::Explicit(p) => m.add_scaled(1.0, p),
                    _ => {}
                }
                Some(Cholesky::factor(&m).map_err(|_| {
                    Error::config(format!("block {}: subproblem matrix is singular", self.block))
                })?)
            }
            Route::ProxLinear => match f {
                BlockFunction::Quadratic { c, .. } => {
                    let mut m = c.gram();
                    m.add_diag(prox.tau().expect("prox-linear has τ"));
                    Some(Cholesky::factor(&m)?)
                }
                _ => None,
            },
            Route::Isotropic => None,
        };
        self.key = Some(key);
        Ok(())
    }

    /// Solves the block subproblem. `b` is the target of `A x`; `w` is
    /// `A x_prev − b` (both are supplied so neither is recomputed with a
    /// different rounding).
    pub(crate) fn solve(
        &mut self,
        f: &BlockFunction,
        a: &Matrix,
        prox: &BlockProx,
        rho: f64,
        b: &[f64],
        w: &[f64],
        x_prev: &[f64],
    ) -> Result<Vec<f64>, Error> {
        self.prepare(f, a, prox, rho)?;
        match self.route.expect("prepared") {
            Route::ProxLinear => {
                let tau = prox.tau().expect("prox-linear has τ");
                let g = a.tr_mul_vec(w);
                let mut v = x_prev.to_vec();
                linalg::axpy(-rho / tau, &g, &mut v);
                match f {
                    BlockFunction::Quadratic { .. } => {
                        // (CᵀC + τI) x = Cᵀd + τ v
                        let mut rhs = self.ctd.clone().expect("quadratic has Cᵀd");
                        linalg::axpy(tau, &v, &mut rhs);
                        self.chol.as_ref().expect("factored").solve_in_place(&mut rhs);
                        Ok(rhs)
                    }
                    _ => f.prox(&v, 1.0 / tau),
                }
            }
            Route::Normal => {
                // (CᵀC + ρAᵀA + P) x = Cᵀd + ρAᵀb + P x_prev
                let mut rhs = a.tr_mul_vec(b);
                rhs.iter_mut().for_each(|v| *v *= rho);
                if let Some(ctd) = &self.ctd {
                    linalg::axpy(1.0, ctd, &mut rhs);
                }
                match prox {
                    BlockProx::Standard(t) => linalg::axpy(*t, x_prev, &mut rhs),
                    BlockProx::Explicit(p) => linalg::axpy(1.0, &p.mul_vec(x_prev), &mut rhs),
                    _ => {}
                }
                self.chol.as_ref().expect("factored").solve_in_place(&mut rhs);
                Ok(rhs)
            }
            Route::Isotropic => {
                let s = self.gram_scalar.expect("isotropic route needs AᵀA = sI");
                let tau = prox.tau().unwrap_or(0.0);
                let q = rho * s + tau;
                let mut z = a.tr_mul_vec(b);
                z.iter_mut().for_each(|v| *v *= rho);
                if tau != 0.0 {
                    linalg::axpy(tau, x_prev, &mut z);
                }
                z.iter_mut().for_each(|v| *v /= q);
                f.prox(&z, 1.0 / q)
            }
        }
    }
}
