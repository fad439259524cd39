//! Topology and channel generation for the indoor and outdoor scenarios:
//! uniform node placement on a disk, COST-231 Hata and ITU indoor pathloss,
//! Rayleigh block fading with unit average power.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ChannelRealization, Topology};
use crate::units::dbm_to_watts;

/// Propagation environment of a scenario template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Environment {
    Outdoor,
    Indoor,
}

/// Static simulation parameters of one environment: cell geometry, power
/// budgets in dBm, noise density and the pathloss model parameters.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioTemplate {
    pub environment: Environment,
    pub cell_radius_m: f64,
    pub carrier_frequency_mhz: f64,
    pub num_subchannels: usize,
    pub subchannel_bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
    pub bs_power_dbm: f64,
    pub ue_power_dbm: f64,
    /// BS antenna height for Hata BS<->UE links.
    pub bs_antenna_height_m: f64,
    /// Mobile antenna height; doubles as the "base" height of UE<->UE Hata
    /// links.
    pub ue_antenna_height_m: f64,
    /// Distance power-loss coefficient of the ITU indoor model.
    pub itu_power_loss_coefficient: f64,
    /// Floor-penetration term of the ITU indoor model, dB.
    pub itu_floor_penetration_db: f64,
    /// Links shorter than this are evaluated at this distance.
    pub min_link_distance_m: f64,
}

impl ScenarioTemplate {
    /// Outdoor urban cell: 1 km radius, 43 dBm BS, COST-231 Hata pathloss.
    pub fn outdoor() -> Self {
        Self {
            environment: Environment::Outdoor,
            cell_radius_m: 1000.0,
            carrier_frequency_mhz: 2000.0,
            num_subchannels: 64,
            subchannel_bandwidth_hz: 150e3,
            noise_density_dbm_hz: -170.0,
            bs_power_dbm: 43.0,
            ue_power_dbm: 23.0,
            bs_antenna_height_m: 30.0,
            ue_antenna_height_m: 1.5,
            itu_power_loss_coefficient: 22.0,
            itu_floor_penetration_db: 9.0,
            min_link_distance_m: 10.0,
        }
    }

    /// Indoor cell: 20 m radius, 24 dBm BS, ITU indoor pathloss.
    pub fn indoor() -> Self {
        Self {
            environment: Environment::Indoor,
            cell_radius_m: 20.0,
            carrier_frequency_mhz: 2000.0,
            num_subchannels: 64,
            subchannel_bandwidth_hz: 150e3,
            noise_density_dbm_hz: -170.0,
            bs_power_dbm: 24.0,
            ue_power_dbm: 23.0,
            bs_antenna_height_m: 30.0,
            ue_antenna_height_m: 1.5,
            itu_power_loss_coefficient: 22.0,
            itu_floor_penetration_db: 9.0,
            min_link_distance_m: 1.0,
        }
    }

    pub fn bs_power_watts(&self) -> f64 {
        dbm_to_watts(self.bs_power_dbm)
    }

    pub fn ue_power_watts(&self) -> f64 {
        dbm_to_watts(self.ue_power_dbm)
    }

    /// Receiver noise per sub-channel in Watts: density times sub-channel
    /// bandwidth.
    pub fn noise_per_subchannel_watts(&self) -> f64 {
        dbm_to_watts(self.noise_density_dbm_hz) * self.subchannel_bandwidth_hz
    }
}

/// Which endpoints a link connects; selects the pathloss parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    BsUser,
    UserUser,
}

/// COST-231 Hata urban pathloss in dB. `f_mhz` is the carrier frequency,
/// `h_b_m`/`h_m_m` the base/mobile antenna heights in meters, `d_km` the
/// distance in kilometers. Includes the +3 dB metropolitan-center correction.
pub fn pathloss_hata_urban(f_mhz: f64, h_b_m: f64, h_m_m: f64, d_km: f64) -> Result<f64> {
    if d_km <= 0.0 {
        return Err(Error::Domain(format!(
            "Hata pathloss requires d > 0, got {d_km} km"
        )));
    }
    let a_hm = (1.1 * f_mhz.log10() - 0.7) * h_m_m - (1.56 * f_mhz.log10() - 0.8);
    Ok(46.3 + 33.9 * f_mhz.log10() - 13.82 * h_b_m.log10() - a_hm
        + (44.9 - 6.55 * h_b_m.log10()) * d_km.log10()
        + 3.0)
}

/// ITU indoor attenuation in dB: `20 log10(f) + N log10(d) + p_f - 28` with
/// `f_mhz` in MHz and `d_m` in meters. Distances below 1 m are clamped to
/// 1 m.
pub fn pathloss_itu_indoor(f_mhz: f64, d_m: f64, n_itu: f64, p_f_db: f64) -> f64 {
    let d = d_m.max(1.0);
    20.0 * f_mhz.log10() + n_itu * d.log10() + p_f_db - 28.0
}

/// Pathloss in dB for a link of `distance_m` meters under this template,
/// after clamping to the template's minimum link distance.
pub fn pathloss_db(template: &ScenarioTemplate, kind: LinkKind, distance_m: f64) -> f64 {
    let d = distance_m.max(template.min_link_distance_m);
    match template.environment {
        Environment::Outdoor => {
            let h_b = match kind {
                LinkKind::BsUser => template.bs_antenna_height_m,
                // Table II prescribes the Hata model with h_B = 1.5 m for
                // UE-to-UE links even though that is outside its nominal
                // validity range.
                LinkKind::UserUser => template.ue_antenna_height_m,
            };
            pathloss_hata_urban(
                template.carrier_frequency_mhz,
                h_b,
                template.ue_antenna_height_m,
                d / 1000.0,
            )
            .expect("clamped distance is positive")
        }
        Environment::Indoor => pathloss_itu_indoor(
            template.carrier_frequency_mhz,
            d,
            template.itu_power_loss_coefficient,
            template.itu_floor_penetration_db,
        ),
    }
}

/// Places the BS at the origin and `num_users` users i.i.d. uniform on the
/// disk of radius `cell_radius_m`. Deterministic in the seed.
pub fn sample_topology(template: &ScenarioTemplate, num_users: usize, seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = (0..num_users)
        .map(|_| {
            // r = R sqrt(u) makes the area density uniform.
            let r = template.cell_radius_m * rng.gen::<f64>().sqrt();
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            [r * theta.cos(), r * theta.sin()]
        })
        .collect();
    Topology {
        bs: [0.0, 0.0],
        users,
    }
}

/// Mean link gains (pure pathloss, fading factor fixed at 1): the linear
/// gain of each BS<->user and user<->user link, identical on every
/// sub-channel.
pub fn pathloss_gains(template: &ScenarioTemplate, topology: &Topology) -> ChannelRealization {
    let k = topology.users.len();
    let n_sc = template.num_subchannels;
    let mut bs_user = vec![0.0; k * n_sc];
    let mut user_user = vec![0.0; k * k * n_sc];
    for a in 0..k {
        let g = linear_gain(template, LinkKind::BsUser, topology.bs_user_distance(a));
        bs_user[a * n_sc..(a + 1) * n_sc].fill(g);
        for b in (a + 1)..k {
            let g = linear_gain(template, LinkKind::UserUser, topology.user_user_distance(a, b));
            for n in 0..n_sc {
                user_user[(a * k + b) * n_sc + n] = g;
                user_user[(b * k + a) * n_sc + n] = g;
            }
        }
    }
    ChannelRealization::from_tables(k, n_sc, bs_user, user_user)
        .expect("tables constructed with matching dimensions")
}

fn linear_gain(template: &ScenarioTemplate, kind: LinkKind, distance_m: f64) -> f64 {
    10f64.powf(-pathloss_db(template, kind, distance_m) / 10.0)
}

/// Draws one channel realization: pathloss times a unit-mean exponential
/// fading factor (squared-magnitude Rayleigh), i.i.d. across links and
/// sub-channels, symmetric between user pairs. Deterministic in the seed.
pub fn sample_channels(
    template: &ScenarioTemplate,
    topology: &Topology,
    seed: u64,
) -> ChannelRealization {
    let mean = pathloss_gains(template, topology);
    let k = topology.users.len();
    let n_sc = template.num_subchannels;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bs_user = vec![0.0; k * n_sc];
    let mut user_user = vec![0.0; k * k * n_sc];
    for a in 0..k {
        for n in 0..n_sc {
            bs_user[a * n_sc + n] = mean.bs_user_gain(a, n) * unit_exponential(&mut rng);
        }
    }
    for a in 0..k {
        for b in (a + 1)..k {
            for n in 0..n_sc {
                let g = mean.user_user_gain(a, b, n) * unit_exponential(&mut rng);
                user_user[(a * k + b) * n_sc + n] = g;
                user_user[(b * k + a) * n_sc + n] = g;
            }
        }
    }
    ChannelRealization::from_tables(k, n_sc, bs_user, user_user)
        .expect("tables constructed with matching dimensions")
}

/// Unit-mean exponential draw: -ln(U) with U uniform on (0, 1].
fn unit_exponential<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>(); // in (0, 1]
    -u.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hata_matches_independent_hand_evaluation() {
        // f=2000 MHz, h_B=30 m, h_m=1.5 m, d=1 km, written out term by term.
        let lf = 2000f64.log10();
        let a_hm = (1.1 * lf - 0.7) * 1.5 - (1.56 * lf - 0.8);
        let expected =
            46.3 + 33.9 * lf - 13.82 * 30f64.log10() - a_hm + (44.9 - 6.55 * 30f64.log10()) * 0.0
                + 3.0;
        let got = pathloss_hata_urban(2000.0, 30.0, 1.5, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 140.744008).abs() < 1e-5, "got {got}");
    }

    #[test]
    fn hata_distance_slope() {
        let slope = 44.9 - 6.55 * 30f64.log10();
        let l1 = pathloss_hata_urban(2000.0, 30.0, 1.5, 1.0).unwrap();
        let l10 = pathloss_hata_urban(2000.0, 30.0, 1.5, 10.0).unwrap();
        assert!((l10 - l1 - slope).abs() < 1e-10);

        let l2 = pathloss_hata_urban(2000.0, 30.0, 1.5, 2.0).unwrap();
        assert!((l2 - l1 - slope * 2f64.log10()).abs() < 1e-10);
    }

    #[test]
    fn hata_rejects_nonpositive_distance() {
        assert!(pathloss_hata_urban(2000.0, 30.0, 1.5, 0.0).is_err());
        assert!(pathloss_hata_urban(2000.0, 30.0, 1.5, -1.0).is_err());
    }

    #[test]
    fn itu_indoor_matches_formula() {
        // 20 log10(2000) + 22 log10(10) + 9 - 28 = 66.0206 + 22 + 9 - 28.
        let expected = 20.0 * 2000f64.log10() + 22.0 + 9.0 - 28.0;
        let got = pathloss_itu_indoor(2000.0, 10.0, 22.0, 9.0);
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 69.020599913).abs() < 1e-8, "got {got}");
    }

    #[test]
    fn itu_indoor_one_meter_and_decade_step() {
        let l1 = pathloss_itu_indoor(2000.0, 1.0, 22.0, 9.0);
        assert!((l1 - (20.0 * 2000f64.log10() + 9.0 - 28.0)).abs() < 1e-12);
        let l10 = pathloss_itu_indoor(2000.0, 10.0, 22.0, 9.0);
        let l100 = pathloss_itu_indoor(2000.0, 100.0, 22.0, 9.0);
        assert!((l100 - l10 - 22.0).abs() < 1e-10);
        // below 1 m clamps to 1 m
        assert_eq!(pathloss_itu_indoor(2000.0, 0.2, 22.0, 9.0), l1);
    }

    #[test]
    fn topology_inside_disk_and_deterministic() {
        let t = ScenarioTemplate::indoor();
        let topo = sample_topology(&t, 1, 7);
        let r = (topo.users[0][0].powi(2) + topo.users[0][1].powi(2)).sqrt();
        assert!(r <= 20.0);
        assert_eq!(topo, sample_topology(&t, 1, 7));
        assert_ne!(topo, sample_topology(&t, 1, 8));
    }

    #[test]
    fn topology_mean_squared_distance_matches_disk_moment() {
        // E[r^2] over a uniform disk of radius R is R^2/2.
        let t = ScenarioTemplate::indoor();
        let topo = sample_topology(&t, 100_000, 123);
        let mean_sq: f64 = topo
            .users
            .iter()
            .map(|u| u[0] * u[0] + u[1] * u[1])
            .sum::<f64>()
            / topo.users.len() as f64;
        let expected = t.cell_radius_m * t.cell_radius_m / 2.0;
        assert!(
            (mean_sq - expected).abs() < 0.02 * expected,
            "mean r^2 = {mean_sq}, expected ~{expected}"
        );
    }

    #[test]
    fn pathloss_gains_equal_pure_pathloss() {
        let t = ScenarioTemplate::indoor();
        let topo = Topology {
            bs: [0.0, 0.0],
            users: vec![[10.0, 0.0], [0.0, 5.0]],
        };
        let g = pathloss_gains(&t, &topo);
        let expected = 10f64.powf(-pathloss_db(&t, LinkKind::BsUser, 10.0) / 10.0);
        assert!((g.bs_user_gain(0, 0) - expected).abs() < 1e-18 * expected.max(1.0));
        // same value on every sub-channel
        assert_eq!(g.bs_user_gain(0, 0), g.bs_user_gain(0, t.num_subchannels - 1));
        let d01 = (10f64.powi(2) + 5f64.powi(2)).sqrt();
        let expected = 10f64.powf(-pathloss_db(&t, LinkKind::UserUser, d01) / 10.0);
        assert!((g.user_user_gain(0, 1, 3) - expected).abs() < 1e-18);
    }

    #[test]
    fn fading_is_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| unit_exponential(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.005, "sample mean {mean}");
    }

    #[test]
    fn channels_symmetric_positive_and_deterministic() {
        let t = ScenarioTemplate::outdoor();
        let topo = sample_topology(&t, 4, 5);
        let ch = sample_channels(&t, &topo, 11);
        for k in 0..4 {
            for j in 0..4 {
                if j == k {
                    continue;
                }
                for n in 0..t.num_subchannels {
                    assert_eq!(ch.user_user_gain(k, j, n), ch.user_user_gain(j, k, n));
                    assert!(ch.user_user_gain(k, j, n) > 0.0);
                }
            }
            for n in 0..t.num_subchannels {
                assert!(ch.bs_user_gain(k, n) > 0.0);
            }
        }
        let again = sample_channels(&t, &topo, 11);
        assert_eq!(ch.bs_user_gain(2, 17), again.bs_user_gain(2, 17));
    }

    #[test]
    fn noise_per_subchannel_matches_density_times_bandwidth() {
        // -170 dBm/Hz over 150 kHz: 1e-17 mW/Hz * 1.5e5 Hz = 1.5e-12 mW.
        let t = ScenarioTemplate::outdoor();
        let noise = t.noise_per_subchannel_watts();
        assert!(((noise - 1.5e-15) / 1.5e-15).abs() < 1e-12, "noise {noise}");
    }
}
