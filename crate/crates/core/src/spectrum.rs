//! Bound-state data: decay rates `γ_k` (energies `-γ_k²`) and the
//! normalisation constants `C_k` of the seed exponentials.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    gammas: Vec<f64>,
    norm_constants: Vec<f64>,
}

impl Spectrum {
    /// Spectrum with the constants that make `U(x, 0)` symmetric.
    pub fn symmetric(gammas: &[f64]) -> Result<Self> {
        validate_gammas(gammas)?;
        let norm_constants = symmetric_norm_constants(gammas)?
            .into_iter()
            .map(f64::sqrt)
            .collect();
        Ok(Spectrum {
            gammas: gammas.to_vec(),
            norm_constants,
        })
    }

    pub fn with_norm_constants(gammas: &[f64], norm_constants: &[f64]) -> Result<Self> {
        validate_gammas(gammas)?;
        if norm_constants.len() != gammas.len() {
            return Err(Error::InvalidSpectrum(format!(
                "{} normalisation constants for {} decay rates",
                norm_constants.len(),
                gammas.len()
            )));
        }
        if let Some(c) = norm_constants.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::InvalidSpectrum(format!(
                "normalisation constants must be finite and positive, got {c}"
            )));
        }
        Ok(Spectrum {
            gammas: gammas.to_vec(),
            norm_constants: norm_constants.to_vec(),
        })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn norm_constants(&self) -> &[f64] {
        &self.norm_constants
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// Whether the constants are the symmetric ones (to 1e-12 relative).
    pub fn is_symmetric(&self) -> bool {
        match symmetric_norm_constants(&self.gammas) {
            Ok(c2) => c2
                .iter()
                .zip(&self.norm_constants)
                .all(|(s, c)| (s.sqrt() - c).abs() <= 1e-12 * c),
            Err(_) => false,
        }
    }

    /// Bound-state energies `-γ_k²`, in the order of the decay rates.
    pub fn energies(&self) -> Vec<f64> {
        self.gammas.iter().map(|g| -g * g).collect()
    }
}

fn validate_gammas(gammas: &[f64]) -> Result<()> {
    if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::InvalidSpectrum(format!(
            "decay rates must be finite and positive, got {g}"
        )));
    }
    for (i, pair) in gammas.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(Error::DegenerateSpectrum {
                index: i + 1,
                value: pair[1],
            });
        }
    }
    Ok(())
}

/// Squared constants `C_k² = 2γ_k Π_{l≠k} (γ_l+γ_k)/|γ_l-γ_k|`.
pub fn symmetric_norm_constants(gammas: &[f64]) -> Result<Vec<f64>> {
    validate_gammas(gammas)?;
    Ok(gammas
        .iter()
        .enumerate()
        .map(|(k, &gk)| {
            gammas
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != k)
                .fold(2.0 * gk, |acc, (_, &gl)| acc * (gl + gk) / (gl - gk).abs())
        })
        .collect())
}
