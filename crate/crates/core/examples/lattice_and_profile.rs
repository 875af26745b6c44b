//! Wavenumber lattices of a 4λ aperture and the two variance profiles built on them.
//!
//! cargo run --example lattice_and_profile

use holo_rmt::geometry::ArrayGeometry;
use holo_rmt::profile::{profile_nonseparable_gaussian, profile_rescale_to_match, profile_separable_isotropic};

fn main() -> holo_rmt::Result<()> {
    let geom = ArrayGeometry::reference(4.0);
    let (rx, tx) = (geom.rx_lattice(), geom.tx_lattice());
    let (n_r, n_s) = geom.antenna_counts();
    println!("antennas: {n_r} rx, {n_s} tx");
    println!("wavenumbers: {} (area law gives {})", rx.len(), rx.ceiling_estimate());

    let sep = profile_separable_isotropic(&rx, &tx)?;
    let ns = profile_nonseparable_gaussian(&sep, &rx, &tx, 1.0)?;
    let ns = profile_rescale_to_match(&ns, &sep)?;
    println!("separable total {:.4}, kernel-coupled total {:.4}", sep.total(), ns.total());

    let centre = rx.index_of((0, 0)).unwrap();
    let edge = rx.index_of((4, 0)).unwrap();
    println!("rx weight at the origin {:.4e}, at the edge (4, 0) {:.4e}", sep.factors().unwrap().0[centre], sep.factors().unwrap().0[edge]);
    println!("coupling origin->origin {:.4e}, origin->edge {:.4e}", ns.matrix()[(centre, centre)], ns.matrix()[(centre, edge)]);
    Ok(())
}
