//! Tail certificates for product gradings.

use super::blocks::Family;

const THETAS: [f64; 12] = [0.3, 0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.93, 0.95, 0.97, 0.985];

pub(crate) type LogZ = [f64; THETAS.len()];

/// Bound on `Σ_{λ₁+…+λₖ > Λ} Π multᵢ e^{−tΣλᵢ}` over one degree composition.
///
/// A single block uses its own tail bound. Products use the Chernoff bound
/// `e^{−θtΛ}·Π Zᵢ((1−θ)t)`, minimised over a grid of `θ`.
pub fn composition_tail(fams: &[Family], t: f64, cutoff: f64) -> f64 {
    match fams {
        [] => 0.0,
        [f] => f.tail(t, cutoff),
        _ => chernoff(&log_partitions(fams, t), t, cutoff),
    }
}

/// `Σᵢ ln Zᵢ((1−θ)t)` for every `θ` of the grid.
pub(crate) fn log_partitions(fams: &[Family], t: f64) -> LogZ {
    THETAS.map(|theta| {
        let s = (1.0 - theta) * t;
        fams.iter().map(|f| f.partition_upper(s).ln()).sum()
    })
}

pub(crate) fn chernoff(log_z: &LogZ, t: f64, cutoff: f64) -> f64 {
    THETAS
        .iter()
        .zip(log_z)
        .map(|(&theta, lz)| (lz - theta * t * cutoff).exp())
        .fold(f64::INFINITY, f64::min)
}

/// Per-grading certificate: the families of every composition and the cutoff.
#[derive(Clone, Debug)]
pub struct TailCertificate {
    pub compositions: Vec<Vec<Family>>,
    pub cutoff: f64,
}

impl TailCertificate {
    pub fn new(compositions: Vec<Vec<Family>>, cutoff: f64) -> Self {
        TailCertificate { compositions, cutoff }
    }

    pub fn bound(&self, t: f64) -> f64 {
        self.compositions
            .iter()
            .map(|fs| composition_tail(fs, t, self.cutoff))
            .sum()
    }
}
