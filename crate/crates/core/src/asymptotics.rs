//! Closed-form one- and two-soliton profiles, collision phase shifts and the
//! large-|t| split of an N-soliton state into shifted single solitons.

use crate::error::{Error, Result};
use crate::evolution::speeds;
use crate::grid::{Grid, GridFunction};
use crate::state::SolitonState;

/// `δ_k = ½ (Σ_{l<k} ln r_kl - Σ_{l>k} ln r_kl)`, `r_kl = |γ_k - γ_l| / (γ_k + γ_l)`.
pub fn phase_shifts(gammas: &[f64]) -> Vec<f64> {
    (0..gammas.len())
        .map(|k| {
            let mut s = 0.0;
            for (l, &gl) in gammas.iter().enumerate() {
                let r = ((gl - gammas[k]).abs() / (gl + gammas[k])).ln();
                if l < k {
                    s += r;
                } else if l > k {
                    s -= r;
                }
            }
            0.5 * s
        })
        .collect()
}

/// Offset `γ_k (x_k - v_k t)` of soliton `k` as `t → +∞`: half the log ratio
/// summed over faster solitons minus that over slower ones. Negated for
/// `t → -∞`. For the dual flows (speed falling with γ) it is `δ_k`.
pub fn asymptotic_offsets(gammas: &[f64], alphas: &[f64]) -> Vec<f64> {
    let v = speeds(gammas, alphas);
    (0..gammas.len())
        .map(|k| {
            let mut s = 0.0;
            for (l, &gl) in gammas.iter().enumerate() {
                if l == k {
                    continue;
                }
                let r = ((gl - gammas[k]).abs() / (gl + gammas[k])).ln();
                if v[l] > v[k] {
                    s += r;
                } else if v[l] < v[k] {
                    s -= r;
                }
            }
            0.5 * s
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonTrack {
    pub k: usize,
    pub gamma: f64,
    /// `α_k / γ_k`.
    pub speed: f64,
    /// `δ_k` from [`phase_shifts`].
    pub delta: f64,
    /// From [`asymptotic_offsets`].
    pub offset: f64,
}

impl SolitonTrack {
    /// Comoving coordinate `x - v t`.
    pub fn y(&self, x: f64, t: f64) -> f64 {
        x - self.speed * t
    }

    /// Expected center at large `|t|`.
    pub fn center(&self, t: f64) -> f64 {
        self.speed * t + t.signum() * self.offset / self.gamma
    }
}

pub fn tracks(gammas: &[f64], alphas: &[f64]) -> Vec<SolitonTrack> {
    let delta = phase_shifts(gammas);
    let offset = asymptotic_offsets(gammas, alphas);
    let v = speeds(gammas, alphas);
    (0..gammas.len())
        .map(|k| SolitonTrack { k, gamma: gammas[k], speed: v[k], delta: delta[k], offset: offset[k] })
        .collect()
}

/// Exact profiles for one or two bound states with the symmetric
/// normalization constants.
#[derive(Debug, Clone)]
pub struct ClosedForm {
    pub u: GridFunction,
    pub psis: Vec<GridFunction>,
    pub xi: GridFunction,
    /// `cosh₁cosh₂ (γ₂ - γ₁ tanh₁ tanh₂)` rescaled to `γ₂ - γ₁ tanh₁ tanh₂`
    /// for two solitons, `1` for one.
    pub denominator: GridFunction,
}

pub fn closed_form_reference(gammas: &[f64], alphas: &[f64], t: f64, grid: &Grid) -> Result<ClosedForm> {
    if alphas.len() != gammas.len() {
        return Err(Error::Spec(format!(
            "{} rates for {} bound states",
            alphas.len(),
            gammas.len()
        )));
    }
    if gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidSpectrum("decay rates must be positive and finite".into()));
    }
    let v = speeds(gammas, alphas);
    match gammas.len() {
        1 => {
            let g = gammas[0];
            let arg = |x: f64| g * (x - v[0] * t);
            let sech = |x: f64| 1.0 / arg(x).cosh();
            Ok(ClosedForm {
                u: grid.sample(|x| -2.0 * g * g * sech(x).powi(2)),
                psis: vec![grid.sample(|x| (0.5 * g).sqrt() * sech(x))],
                xi: grid.sample(|x| arg(x).tanh()),
                denominator: grid.sample(|_| 1.0),
            })
        }
        2 => {
            let (g1, g2) = (gammas[0], gammas[1]);
            if g2 <= g1 {
                return Err(Error::InvalidSpectrum(format!(
                    "two-soliton form needs γ₂ > γ₁, got {g1} and {g2}"
                )));
            }
            let delta = g2 * g2 - g1 * g1;
            let parts = |x: f64| {
                let (a1, a2) = (g1 * (x - v[0] * t), g2 * (x - v[1] * t));
                let (t1, t2) = (a1.tanh(), a2.tanh());
                let (s1, s2) = (1.0 / a1.cosh(), 1.0 / a2.cosh());
                (t1, t2, s1, s2, g2 - g1 * t1 * t2)
            };
            let u = grid.sample(|x| {
                let (_, t2, s1, s2, d) = parts(x);
                -2.0 * delta / (d * d) * (g2 * g2 * s2 * s2 + g1 * g1 * t2 * t2 * s1 * s1)
            });
            let psi1 = grid.sample(|x| {
                let (_, t2, s1, _, d) = parts(x);
                (0.5 * g1 * delta).sqrt() * s1 * t2 / d
            });
            let psi2 = grid.sample(|x| {
                let (_, _, _, s2, d) = parts(x);
                (0.5 * g2 * delta).sqrt() * s2 / d
            });
            let xi = grid.sample(|x| {
                let (t1, t2, _, _, d) = parts(x);
                (g2 * t1 * t2 - g1) / d
            });
            let denominator = grid.sample(|x| parts(x).4);
            Ok(ClosedForm { u, psis: vec![psi1, psi2], xi, denominator })
        }
        n => Err(Error::Spec(format!("closed forms exist for one or two solitons, not {n}"))),
    }
}

/// How well one soliton of a large-|t| state matches its isolated profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonFit {
    pub track: SolitonTrack,
    pub center_predicted: f64,
    pub center_measured: f64,
    /// `sign(t) γ (x_measured - v t)`.
    pub shift_measured: f64,
    /// `|shift_measured - δ_k|`.
    pub delta_deviation: f64,
    /// Max of `|U - u_k|` over the window.
    pub potential_error: f64,
    /// Max of `|ψ_k - ±√(γ/2) sech|` over the window.
    pub psi_error: f64,
    /// Max of `|ξ² - tanh²|` over the window.
    pub xi_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub time: f64,
    /// Smallest `|t|` at which all centers are `10/γ_min` apart.
    pub required_abs_t: f64,
    pub asymptotic: bool,
    pub solitons: Vec<SolitonFit>,
}

impl DecompositionReport {
    pub fn max_potential_error(&self) -> f64 {
        self.solitons.iter().fold(0.0, |m, s| m.max(s.potential_error))
    }

    pub fn max_psi_error(&self) -> f64 {
        self.solitons.iter().fold(0.0, |m, s| m.max(s.psi_error))
    }

    pub fn max_xi_error(&self) -> f64 {
        self.solitons.iter().fold(0.0, |m, s| m.max(s.xi_error))
    }

    pub fn max_delta_deviation(&self) -> f64 {
        self.solitons.iter().fold(0.0, |m, s| m.max(s.delta_deviation))
    }

    pub fn max_center_error(&self) -> f64 {
        self.solitons
            .iter()
            .fold(0.0, |m, s| m.max((s.center_measured - s.center_predicted).abs()))
    }
}

/// Half width of the comparison window in units of `1/γ_k`.
pub const WINDOW: f64 = 6.0;

fn required_abs_t(gammas: &[f64], v: &[f64]) -> f64 {
    let g_min = gammas.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut gap = f64::INFINITY;
    for k in 0..v.len() {
        for l in k + 1..v.len() {
            gap = gap.min((v[k] - v[l]).abs());
        }
    }
    if gap.is_infinite() {
        0.0
    } else {
        10.0 / (g_min * gap)
    }
}

/// Compare every soliton window against the isolated profile, whatever
/// the separation; `asymptotic` says whether the comparison is meaningful.
pub fn decomposition_report(state: &SolitonState) -> Result<DecompositionReport> {
    let t = state.time();
    let gammas = state.gammas();
    let grid = state.grid();
    let trs = tracks(gammas, state.alphas());
    let v: Vec<f64> = trs.iter().map(|tr| tr.speed).collect();
    let required = required_abs_t(gammas, &v);
    let xs: Vec<f64> = grid.xs().collect();
    let (u, xi) = (state.u().values(), state.xi().values());

    let mut solitons = Vec::with_capacity(trs.len());
    for tr in trs {
        let predicted = tr.center(t);
        let half = WINDOW / tr.gamma;
        let lo = xs.partition_point(|&x| x < tr.speed * t - half);
        let hi = xs.partition_point(|&x| x <= tr.speed * t + half);
        if hi <= lo + 2 || lo == 0 || hi >= xs.len() {
            return Err(Error::Range { x: tr.speed * t });
        }

        let mut i_min = lo;
        for i in lo..hi {
            if u[i] < u[i_min] {
                i_min = i;
            }
        }
        let measured = if i_min > 0 && i_min + 1 < xs.len() {
            let (a, b, c) = (u[i_min - 1], u[i_min], u[i_min + 1]);
            let curv = a - 2.0 * b + c;
            let frac = if curv > 0.0 { 0.5 * (a - c) / curv } else { 0.0 };
            xs[i_min] + frac * grid.step()
        } else {
            xs[i_min]
        };
        let sign_t = if t < 0.0 { -1.0 } else { 1.0 };
        let shift_measured = sign_t * tr.gamma * (measured - tr.speed * t);

        let psi = state.psi(tr.k).values();
        let phase = if psi[i_min] < 0.0 { -1.0 } else { 1.0 };
        let (mut pe, mut qe, mut xe) = (0.0f64, 0.0f64, 0.0f64);
        for i in lo..hi {
            let a = tr.gamma * (xs[i] - predicted);
            let sech = 1.0 / a.cosh();
            let th = a.tanh();
            pe = pe.max((u[i] + 2.0 * tr.gamma * tr.gamma * sech * sech).abs());
            qe = qe.max((phase * psi[i] - (0.5 * tr.gamma).sqrt() * sech).abs());
            xe = xe.max((xi[i] * xi[i] - th * th).abs());
        }
        solitons.push(SolitonFit {
            track: tr,
            center_predicted: predicted,
            center_measured: measured,
            shift_measured,
            delta_deviation: (shift_measured - tr.delta).abs(),
            potential_error: pe,
            psi_error: qe,
            xi_error: xe,
        });
    }
    Ok(DecompositionReport { time: t, required_abs_t: required, asymptotic: t.abs() >= required, solitons })
}

/// As [`decomposition_report`], refusing states whose solitons overlap.
pub fn asymptotic_decomposition(state: &SolitonState) -> Result<DecompositionReport> {
    let gammas = state.gammas();
    let v = speeds(gammas, state.alphas());
    let required = required_abs_t(gammas, &v);
    if !(state.time().abs() >= required) {
        return Err(Error::NotAsymptotic { required_t: required });
    }
    decomposition_report(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{alphas_for, EvolutionKind};
    use crate::spectrum::Spectrum;
    use crate::state::build_state;

    fn state(gammas: &[f64], kind: EvolutionKind, t: f64) -> SolitonState {
        let s = Spectrum::symmetric(gammas).unwrap();
        let a = alphas_for(&kind, gammas).unwrap();
        let grid = Grid::for_solitons(gammas, &a, t.abs()).unwrap();
        build_state(&s, &a, t, &grid).unwrap()
    }

    #[test]
    fn shifts_two_solitons() {
        let d = phase_shifts(&[1.0, 2.0]);
        assert!((d[0] - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!((d[1] + 0.5 * 3f64.ln()).abs() < 1e-15);
        assert_eq!(phase_shifts(&[1.3]), vec![0.0]);
    }

    #[test]
    fn offsets_follow_speed_order() {
        let g = [1.0, 2.0, 3.5];
        let dual = asymptotic_offsets(&g, &alphas_for(&EvolutionKind::Dual(1), &g).unwrap());
        let lax = asymptotic_offsets(&g, &alphas_for(&EvolutionKind::Lax(1), &g).unwrap());
        for ((d, l), p) in dual.iter().zip(&lax).zip(phase_shifts(&g)) {
            assert!((d - p).abs() < 1e-15);
            assert!((l + p).abs() < 1e-15);
        }
    }

    #[test]
    fn two_soliton_values_at_origin() {
        let grid = Grid::new(-1.0, 1.0, 201).unwrap();
        let cf = closed_form_reference(&[1.0, 2.0], &[0.25, 0.125], 0.0, &grid).unwrap();
        let i = grid.nearest_index(0.0);
        assert!((cf.u.values()[i] + 6.0).abs() < 1e-14);
        assert!((cf.denominator.values()[i] - 2.0).abs() < 1e-15);
        assert!(cf.psis[0].values()[i].abs() < 1e-15);
        assert!((cf.psis[1].values()[i] - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_reject_bad_input() {
        let grid = Grid::new(-1.0, 1.0, 5).unwrap();
        assert!(matches!(
            closed_form_reference(&[2.0, 1.0], &[0.0, 0.0], 0.0, &grid),
            Err(Error::InvalidSpectrum(_))
        ));
        assert!(closed_form_reference(&[1.0, 2.0, 3.0], &[0.0; 3], 0.0, &grid).is_err());
    }

    #[test]
    fn closed_forms_match_construction() {
        for (gammas, kind) in [
            (vec![1.0], EvolutionKind::Dual(1)),
            (vec![1.0, 2.0], EvolutionKind::Dual(1)),
            (vec![0.7, 1.9], EvolutionKind::Lax(1)),
        ] {
            for t in [0.0, -1.0, 10.0] {
                let st = state(&gammas, kind.clone(), t);
                let cf = closed_form_reference(&gammas, st.alphas(), t, st.grid()).unwrap();
                assert!((st.u() - &cf.u).max_abs() < 1e-9, "{gammas:?} {t}");
                assert!((st.xi() - &cf.xi).max_abs() < 1e-9, "{gammas:?} {t}");
                for k in 0..gammas.len() {
                    assert!((st.psi(k) - &cf.psis[k]).max_abs() < 1e-9, "{gammas:?} {t} {k}");
                }
            }
        }
    }

    #[test]
    fn dual_one_soliton_xi_is_tanh() {
        let st = state(&[1.0], EvolutionKind::Dual(1), 2.0);
        let want = st.grid().sample(|x| (x - 0.5).tanh());
        assert!((st.xi() - &want).max_abs() < 1e-12);
    }

    #[test]
    fn single_soliton_decomposes_exactly() {
        let st = state(&[1.5], EvolutionKind::Lax(1), 0.4);
        let rep = asymptotic_decomposition(&st).unwrap();
        assert!(rep.asymptotic && rep.required_abs_t == 0.0);
        assert!(rep.max_potential_error() < 1e-10);
        assert!(rep.max_psi_error() < 1e-10);
        assert!(rep.max_center_error() < 1e-6);
    }

    #[test]
    fn overlapping_solitons_are_flagged() {
        let st = state(&[1.0, 2.0], EvolutionKind::Dual(1), 0.0);
        assert!(matches!(
            asymptotic_decomposition(&st),
            Err(Error::NotAsymptotic { required_t }) if (required_t - 10.0 / 0.1875).abs() < 1e-9
        ));
        let rep = decomposition_report(&st).unwrap();
        assert!(!rep.asymptotic);
        assert!(rep.max_potential_error() > 0.1);
    }

    #[test]
    fn dual_collision_shifts() {
        for t in [-200.0, 200.0] {
            let st = state(&[1.0, 2.0], EvolutionKind::Dual(1), t);
            let rep = asymptotic_decomposition(&st).unwrap();
            assert!(rep.max_potential_error() < 1e-3, "{rep:?}");
            assert!(rep.max_psi_error() < 1e-3, "{rep:?}");
            assert!(rep.max_xi_error() < 1e-3, "{rep:?}");
            assert!(rep.max_delta_deviation() < 1e-2, "{rep:?}");
            assert!(rep.max_center_error() < 2.0 * st.grid().step(), "{rep:?}");
        }
    }

    #[test]
    fn lax_collision_shifts_are_reversed() {
        let t = 6.0;
        let st = state(&[1.0, 2.0], EvolutionKind::Lax(1), t);
        let rep = asymptotic_decomposition(&st).unwrap();
        assert!(rep.max_potential_error() < 1e-3, "{rep:?}");
        for s in &rep.solitons {
            assert!((s.shift_measured + s.track.delta).abs() < 1e-2, "{s:?}");
        }
    }
}
