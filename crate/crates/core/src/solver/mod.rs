//! Numeric solutions from Birkhoff factorization of loops on the unit circle.
//!
//! A source loop `g` and flow parameters `t` give the loop
//! `delta(l) gamma(t) g gamma(t)^-1 delta(-l)`, which is factored as
//! `u_minus^-1 p_plus`. The generators `u_minus E u_minus^-1` and
//! `p_plus E z^-1 p_plus^-1` then solve the combined hierarchy.

mod annulus;
mod birkhoff;
mod verify;
mod wave;

use rand::SeedableRng;

pub use annulus::{delta_twist, gamma_eval, AnnulusLoop, CMat};
pub use birkhoff::{birkhoff_factorize, reconstruction_error, Factorization};
pub use verify::{fd_verify, Check, FdProblem, Outcome, ResidualReport};
pub use wave::{
    build_wave_pair, dressed_loop, extract_solution, reduce_subhierarchy, strict_leading, HierarchySolution,
    WaveMatrixPair,
};

use crate::config::{LoopSpec, SolverParams};
use crate::error::{Error, Result};

/// Materializes a configured source loop; random loops draw from a ChaCha8 stream seeded by `seed`.
pub fn source_loop(spec: &LoopSpec, n: usize, seed: u64, params: &SolverParams) -> Result<AnnulusLoop> {
    let loop_ = match spec {
        LoopSpec::Identity => AnnulusLoop::identity(n, params.n_bound),
        LoopSpec::Coeffs(map) => {
            let coeffs = map
                .iter()
                .map(|(k, rows)| {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(Error::DimensionMismatch(format!("coefficient of z^{k} is not {n}x{n}")));
                    }
                    Ok((*k, CMat::from_fn(n, n, |i, j| rows[i][j].0)))
                })
                .collect::<Result<Vec<_>>>()?;
            AnnulusLoop::from_coeffs(n, params.n_bound, coeffs)?
        }
        LoopSpec::Random { epsilon, modes } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            AnnulusLoop::random_exp(&mut rng, n, *epsilon, *modes, params.n_bound, params.grid, params.tol.tail)?
        }
    };
    loop_.check_tail(params.tol.tail)?;
    Ok(loop_)
}
