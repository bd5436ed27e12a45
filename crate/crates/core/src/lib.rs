//! Nonlinear opinion dynamics on signed directed networks.
//!
//! Agents evolve by `ẋ = -d x + U S(α x + γ A x)` where `A` carries edge signs.
//! On a structurally balanced graph the switching transformation `ΘAΘ` maps
//! one pitchfork onto another, so the sign pattern of the stable equilibria
//! can be designed by choosing which agents to switch.
//!
//! - [`graph`]: signed graphs, balance certificates, switching.
//! - [`spectral`]: leading eigenpair and bifurcation thresholds.
//! - [`dynamics`]: right-hand side, RK4 integration, equilibria, diagnostics.
//! - [`switching`]: pattern design, switching runs, basin predictions.

pub mod dynamics;
pub mod eigen;
pub mod graph;
pub mod spectral;
pub mod switching;

pub mod rng {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent stream `index` of the master `seed`.
    pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }
}
