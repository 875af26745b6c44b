//! Solves the coupled fixed point for a random Rician model and checks it
//! against the iid closed form.

use holo_rmt::linalg::{CMatrix, RMatrix};
use holo_rmt::{solve_deltas, synth_los, ChannelModel, LosKind, SolverOptions, VarianceProfile};

fn main() -> holo_rmt::Result<()> {
    let opts = SolverOptions::default();

    let rho = 1.0;
    let iid = ChannelModel::new(CMatrix::zeros(8, 8), VarianceProfile::new(RMatrix::from_element(8, 8, 1.0))?, rho)?;
    let (sol, _) = solve_deltas(&iid, &opts)?;
    let closed = (-1.0 + (1.0 + 4.0 / rho).sqrt()) / 2.0;
    println!("iid: δ = {:.15}, closed form {:.15}", sol.delta[0], closed);

    let sigma = RMatrix::from_fn(12, 8, |i, j| 0.5 + ((i * 7 + j * 3) % 5) as f64 / 4.0);
    let a = synth_los(12, 8, LosKind::LowRank { rank: 2 }, 3)?;
    let model = ChannelModel::new(a, VarianceProfile::new(sigma)?, 0.2)?;
    let (sol, res) = solve_deltas(&model, &opts)?;
    println!("rician: {} iterations, last update {:.2e}", sol.iterations, sol.residual);
    println!("δ  = {:.6?}", sol.delta.as_slice());
    println!("δ̃ = {:.6?}", sol.delta_tilde.as_slice());
    println!("diag T[..3] = {:.6?}", &res.t_diag.as_slice()[..3]);
    Ok(())
}
