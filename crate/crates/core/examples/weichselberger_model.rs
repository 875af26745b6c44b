//! A Kronecker channel is the separable case of the Weichselberger one: same
//! deterministic equivalent, same sampled matrices.

use holo_rmt::linalg::CMatrix;
use holo_rmt::montecarlo::{sample_noise, sample_rng};
use holo_rmt::{analyze, synth_los, ChannelModel, LosKind, SolverOptions, VarianceProfile};

fn main() -> holo_rmt::Result<()> {
    let d = vec![1.6, 1.2, 1.0, 0.7, 0.5];
    let dt = vec![1.3, 1.0, 0.7];
    let a: CMatrix = synth_los(5, 3, LosKind::LowRank { rank: 1 }, 9)?;
    let kron = ChannelModel::kronecker(a.clone(), d.clone(), dt.clone(), 0.1)?;
    let weich = ChannelModel::weichselberger(a, VarianceProfile::separable(d, dt)?, 0.1)?;

    let opts = SolverOptions::default();
    let (c1, c2) = (analyze(&kron, &opts)?.stats, analyze(&weich, &opts)?.stats);
    println!("C̄: {:.12} vs {:.12}", c1.emi, c2.emi);
    println!("V:  {:.12} vs {:.12}", c1.variance, c2.variance);

    let x = sample_noise(5, 3, &mut sample_rng(1, 0));
    let same = kron.kronecker_channel_from_noise(&x).unwrap() == weich.channel_from_noise(&x);
    println!("identical channel draws: {same}");
    Ok(())
}
