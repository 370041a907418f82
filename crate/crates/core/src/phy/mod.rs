//! Transmit and receive chain: constellation mapping, element-domain
//! synthesis, channel and jammer injection, DFT de-hopping and ML detection.

mod constellation;
mod detect;
mod frame;

pub use constellation::{demap, modulate, Constellation, SymbolVector};
pub use detect::{ml_detect, ml_detect_imperfect, DetectorVariances};
pub use frame::{
    channel_pass, dehop, dehop_dsmh, emit, emit_dsmh, genie_kappa, mode_gains, DehoppedSignals,
    ElementFrame, JammerDraw,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Modulation;
    use crate::hopping::{mode_universe, unrank_subset, HopPattern, ModeSet};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-12;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bpsk() -> Constellation {
        Constellation::new(Modulation::Psk, 2).unwrap()
    }

    fn set(modes: &[i32], n: usize) -> ModeSet {
        ModeSet::new(modes.to_vec(), n).unwrap()
    }

    fn pattern(sets: Vec<ModeSet>, second: Option<Vec<i32>>) -> HopPattern {
        HopPattern { per_hop_sets: sets, second_hop_modes: second }
    }

    fn random_symbols(rng: &mut ChaCha8Rng, i: usize, c: &Constellation) -> SymbolVector {
        let labels = (0..i).map(|_| rng.random_range(0..c.order() as u32)).collect();
        SymbolVector::from_labels(labels, c)
    }

    fn helix(n: usize, l: i32, m: usize) -> Complex64 {
        Complex64::from_polar(1.0, std::f64::consts::TAU * m as f64 * l as f64 / n as f64)
    }

    #[test]
    fn emit_single_modes() {
        let c = bpsk();
        let one = SymbolVector::from_labels(vec![0], &c);
        let f = emit(&one, &set(&[0], 8), 8).unwrap();
        assert!(f.samples.iter().all(|x| (x - c64(1.0, 0.0)).norm() < EPS));
        for l in -3..=4 {
            let f = emit(&one, &set(&[l], 8), 8).unwrap();
            for (m, x) in f.samples.iter().enumerate() {
                assert!((x - helix(8, l, m)).norm() < EPS);
                assert!((x.norm() - 1.0).abs() < EPS);
            }
        }
    }

    #[test]
    fn emit_is_linear() {
        let c = Constellation::new(Modulation::Qam, 16).unwrap();
        let s = SymbolVector::from_labels(vec![3, 12], &c);
        let both = emit(&s, &set(&[-1, 2], 8), 8).unwrap();
        let a = emit(&SymbolVector::from_labels(vec![3], &c), &set(&[-1], 8), 8).unwrap();
        let b = emit(&SymbolVector::from_labels(vec![12], &c), &set(&[2], 8), 8).unwrap();
        for k in 0..8 {
            assert!((both.samples[k] - a.samples[k] - b.samples[k]).norm() < EPS);
        }
    }

    #[test]
    fn dehop_round_trip_and_orthogonality() {
        let c = Constellation::new(Modulation::Psk, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let modes = set(&[-2, 0, 3], 8);
        let s = random_symbols(&mut rng, 3, &c);
        let y = dehop(&emit(&s, &modes, 8).unwrap(), &modes).unwrap();
        for (a, b) in y.iter().zip(&s.symbols) {
            assert!((a - b).norm() < EPS);
        }
        let one = SymbolVector::from_labels(vec![0], &c);
        for l in -3..=4 {
            let f = emit(&one, &set(&[l], 8), 8).unwrap();
            for lp in (-3..=4).filter(|&x| x != l) {
                assert!(dehop(&f, &set(&[lp], 8)).unwrap()[0].norm() < EPS);
            }
        }
    }

    #[test]
    fn dft_energy_bookkeeping() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 16;
        let mut f = ElementFrame::zeros(n, 1);
        for x in f.samples.iter_mut() {
            *x = c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        let universe = mode_universe(n).unwrap();
        let bins = dehop(&f, &universe).unwrap();
        let lhs = f.energy() / n as f64;
        let rhs: f64 = bins.iter().map(|b| b.norm_sqr()).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
    }

    #[test]
    fn identity_channel_passes_frame_unchanged() {
        let c = Constellation::new(Modulation::Qam, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let modes = set(&[-3, 1], 8);
        let s = random_symbols(&mut rng, 2, &c);
        let frame = emit(&s, &modes, 8).unwrap();
        let silent = JammerDraw::silent(&pattern(vec![modes.clone()], None));
        let out = channel_pass(&frame, &[c64(1.0, 0.0); 8], &silent, 0, 0.0, &mut rng).unwrap();
        for (a, b) in out.samples.iter().zip(&frame.samples) {
            assert!((a - b).norm() < EPS);
        }
    }

    #[test]
    fn jam_on_other_modes_leaves_slots_unchanged() {
        let c = bpsk();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let modes = set(&[-1, 2], 8);
        let s = random_symbols(&mut rng, 2, &c);
        let gains = [c64(0.7, -0.2), c64(-0.3, 1.1)];
        let jam = JammerDraw {
            jam_sets: vec![set(&[0, 4], 8)],
            jam_symbols: vec![vec![c64(30.0, -4.0), c64(-12.0, 9.0)]],
            kappa: vec![vec![false, false]],
        };
        let g = mode_gains(8, &modes, &gains);
        let rx = channel_pass(&emit(&s, &modes, 8).unwrap(), &g, &jam, 0, 0.0, &mut rng).unwrap();
        let y = dehop(&rx, &modes).unwrap();
        for i in 0..2 {
            assert!((y[i] - gains[i] * s.symbols[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn jammer_draw_shapes_and_kappa() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sets = vec![set(&[-3, 1], 8), set(&[0, 2], 8), set(&[3, 4], 8)];
        let p = pattern(sets, None);
        for _ in 0..200 {
            let jam = JammerDraw::draw(8, 2, 1.0, &p, &mut rng).unwrap();
            assert_eq!(jam.hops(), 3);
            for u in 0..3 {
                assert_eq!(jam.jam_sets[u].len(), 2);
                for (i, &l) in p.per_hop_sets[u].iter().enumerate() {
                    assert_eq!(jam.kappa[u][i], jam.jam_sets[u].contains(l));
                }
            }
        }
    }

    #[test]
    fn post_dehop_noise_and_jam_variances() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 8;
        let modes = set(&[-2, 1], n);
        let p = pattern(vec![modes.clone()], None);
        let g = mode_gains(n, &modes, &[c64(1.0, 0.0); 2]);
        let zero = SymbolVector { labels: vec![0, 0], symbols: vec![c64(0.0, 0.0); 2] };
        let frame = emit(&zero, &modes, n).unwrap();
        let (noise_var, jam_var) = (0.3, 2.0);
        let jam = JammerDraw {
            jam_sets: vec![set(&[-2, 4], n)],
            jam_symbols: vec![vec![c64(0.0, 0.0); 2]],
            kappa: vec![vec![true, false]],
        };
        let trials = 200_000;
        let (mut acc_noise, mut acc_jam) = (0.0, 0.0);
        let mut jam = jam;
        for _ in 0..trials {
            jam.jam_symbols[0] =
                (0..2).map(|_| crate::channel::complex_gaussian(&mut rng, jam_var)).collect();
            let rx = channel_pass(&frame, &g, &jam, 0, noise_var, &mut rng).unwrap();
            let y = dehop(&rx, &modes).unwrap();
            acc_jam += y[0].norm_sqr();
            acc_noise += y[1].norm_sqr();
        }
        let _ = p;
        let est_noise = acc_noise / trials as f64;
        let est_total = acc_jam / trials as f64;
        // Exponential power estimates: relative standard error 1/√trials.
        let tol = 4.0 / (trials as f64).sqrt();
        assert!((est_noise / noise_var - 1.0).abs() < tol, "{est_noise}");
        assert!((est_total / (noise_var + jam_var) - 1.0).abs() < tol, "{est_total}");
    }

    #[test]
    fn dsmh_noise_variance_after_double_dehop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 8;
        let modes = set(&[-1, 3], n);
        let p = pattern(vec![modes.clone()], Some(vec![2]));
        let g = mode_gains(n, &modes, &[c64(1.0, 0.0); 2]);
        let zero = SymbolVector { labels: vec![0, 0], symbols: vec![c64(0.0, 0.0); 2] };
        let frame = emit_dsmh(&zero, &modes, 2, n).unwrap();
        let silent = JammerDraw::silent(&p);
        let trials = 50_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let rx = channel_pass(&frame, &g, &silent, 0, 0.5, &mut rng).unwrap();
            acc += dehop_dsmh(&rx, &modes, 2).unwrap().iter().map(|y| y.norm_sqr()).sum::<f64>();
        }
        let est = acc / (2 * trials) as f64;
        assert!((est / 0.5 - 1.0).abs() < 4.0 / ((2 * trials) as f64).sqrt(), "{est}");
    }

    #[test]
    fn dsmh_round_trip_recovers_gain_times_symbol() {
        let c = Constellation::new(Modulation::Qam, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 8;
        for ls in -3..=4 {
            let modes = set(&[-3, 0, 2], n);
            let s = random_symbols(&mut rng, 3, &c);
            let gains: Vec<Complex64> =
                (0..3).map(|_| c64(rng.random::<f64>(), rng.random::<f64>())).collect();
            let p = pattern(vec![modes.clone()], Some(vec![ls]));
            let rx = channel_pass(
                &emit_dsmh(&s, &modes, ls, n).unwrap(),
                &mode_gains(n, &modes, &gains),
                &JammerDraw::silent(&p),
                0,
                0.0,
                &mut rng,
            )
            .unwrap();
            let y = dehop_dsmh(&rx, &modes, ls).unwrap();
            for i in 0..3 {
                assert!((y[i] - gains[i] * s.symbols[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dsmh_frames_with_distinct_second_modes_are_orthogonal() {
        let c = bpsk();
        let n = 8;
        let modes = set(&[-1, 2], n);
        let s = SymbolVector::from_labels(vec![0, 1], &c);
        let frames: Vec<_> = (-3..=4).map(|ls| emit_dsmh(&s, &modes, ls, n).unwrap()).collect();
        for a in 0..frames.len() {
            for b in 0..frames.len() {
                let ip = frames[a].inner(&frames[b]).norm();
                if a == b {
                    assert!(ip > 1.0);
                } else {
                    assert!(ip < 1e-10, "{a} {b}: {ip}");
                }
            }
        }
    }

    fn residual_jam(n: usize, modes: &ModeSet, ls: i32, jam: &JammerDraw) -> f64 {
        let rx = jam.frame(0, n, n);
        dehop_dsmh(&rx, modes, ls).unwrap().iter().map(|y| y.norm_sqr()).sum()
    }

    #[test]
    fn dsmh_cancels_jammer_unless_second_mode_is_zero() {
        let n = 8;
        let modes = set(&[-2, 1, 3], n);
        let jam = JammerDraw {
            jam_sets: vec![set(&[-2, 1, 3], n)],
            jam_symbols: vec![vec![c64(3.0, 1.0), c64(-2.0, 5.0), c64(0.5, -4.0)]],
            kappa: vec![vec![true; 3]],
        };
        let injected = jam.injected_power(0);
        for ls in (-3..=4).filter(|&x| x != 0) {
            assert!(residual_jam(n, &modes, ls, &jam) < 1e-20 * injected);
        }
        let r0 = residual_jam(n, &modes, 0, &jam);
        assert!((r0 - injected).abs() < 1e-9 * injected, "{r0} vs {injected}");
    }

    #[test]
    fn genie_kappa_respects_second_mode() {
        let n = 8;
        let p = pattern(vec![set(&[-1, 2], n), set(&[0, 3], n)], Some(vec![0, 2]));
        let jam_sets = vec![set(&[2, 4], n), set(&[0, 3], n)];
        let k = genie_kappa(&p, &jam_sets);
        assert_eq!(k, vec![vec![false, true], vec![false, false]]);
    }

    #[test]
    fn exhaustive_noiseless_identity_both_schemes() {
        let c = bpsk();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in (2..=16).step_by(2) {
            let universe = mode_universe(n).unwrap();
            let tw_count = n as i32;
            for i in 1..=4.min(n) {
                let total = crate::hopping::binomial(n as u64, i as u64).unwrap();
                for r in 0..total {
                    let modes = ModeSet::new(unrank_subset(&universe, i, r).unwrap(), n).unwrap();
                    let s = random_symbols(&mut rng, i, &c);
                    let y = dehop(&emit(&s, &modes, n).unwrap(), &modes).unwrap();
                    for (a, b) in y.iter().zip(&s.symbols) {
                        assert!((a - b).norm() < 1e-12);
                    }
                    if i < n {
                        let ls = (r as i32).rem_euclid(tw_count) - tw_count / 2 + 1;
                        let y = dehop_dsmh(&emit_dsmh(&s, &modes, ls, n).unwrap(), &modes, ls)
                            .unwrap();
                        for (a, b) in y.iter().zip(&s.symbols) {
                            assert!((a - b).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    fn obs(values: Vec<Vec<Complex64>>) -> DehoppedSignals {
        DehoppedSignals { values }
    }

    /// Joint enumeration of all M^I candidates; first strict minimum wins.
    fn brute_force(
        y: &DehoppedSignals,
        h: &[Vec<Complex64>],
        jammed: &[Vec<bool>],
        var: DetectorVariances,
        c: &Constellation,
    ) -> Vec<u32> {
        let i = y.values[0].len();
        let m = c.order();
        let mut best = (f64::INFINITY, vec![]);
        for idx in 0..m.pow(i as u32) {
            let labels: Vec<u32> =
                (0..i).map(|k| ((idx / m.pow((i - 1 - k) as u32)) % m) as u32).collect();
            let mut metric = 0.0;
            for u in 0..y.hops() {
                for k in 0..i {
                    let s = c.point(labels[k]);
                    let base = if jammed[u][k] { var.noise + var.jam } else { var.noise };
                    metric += (y.values[u][k] - h[u][k] * s).norm_sqr()
                        / (base + var.est_err * s.norm_sqr());
                }
            }
            if metric < best.0 {
                best = (metric, labels);
            }
        }
        best.1
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        hops: usize,
        i: usize,
    ) -> (DehoppedSignals, Vec<Vec<Complex64>>, Vec<Vec<bool>>) {
        let mut g = || c64(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
        let y = obs((0..hops).map(|_| (0..i).map(|_| g()).collect()).collect());
        let h = (0..hops).map(|_| (0..i).map(|_| g()).collect()).collect();
        let j = (0..hops).map(|_| (0..i).map(|_| rng.random::<bool>()).collect()).collect();
        (y, h, j)
    }

    #[test]
    fn ml_noiseless_recovers_every_input() {
        let c = bpsk();
        for i in 1..=3 {
            for idx in 0..(1u32 << i) {
                let labels: Vec<u32> = (0..i).map(|k| (idx >> k) & 1).collect();
                let s = SymbolVector::from_labels(labels.clone(), &c);
                let h = vec![vec![c64(0.8, 0.3); i]; 2];
                let y = obs(
                    h.iter()
                        .map(|row| row.iter().zip(&s.symbols).map(|(a, b)| a * b).collect())
                        .collect(),
                );
                let got = ml_detect(&y, &h, &vec![vec![false; i]; 2], 0.1, 0.2, &c).unwrap();
                assert_eq!(got.labels, labels);
            }
        }
    }

    #[test]
    fn ml_matches_brute_force_and_is_scale_invariant() {
        let c = Constellation::new(Modulation::Psk, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..300 {
            let (y, h, j) = random_instance(&mut rng, 3, 3);
            let var = DetectorVariances { noise: 0.2, jam: 1.5, est_err: 0.0 };
            let a = ml_detect(&y, &h, &j, 0.2, 1.5, &c).unwrap();
            assert_eq!(a.labels, brute_force(&y, &h, &j, var, &c));
            let b = ml_detect(&y, &h, &j, 0.2 * 37.0, 1.5 * 37.0, &c).unwrap();
            assert_eq!(a.labels, b.labels);
        }
    }

    #[test]
    fn ml_infinite_jam_ignores_jammed_slots() {
        let c = Constellation::new(Modulation::Psk, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let (y, h, j) = random_instance(&mut rng, 3, 2);
            let got = ml_detect(&y, &h, &j, 0.3, f64::INFINITY, &c).unwrap();
            let near = ml_detect(&y, &h, &j, 0.3, 1e15, &c).unwrap();
            // Drop jammed slots entirely: zero gain and zero observation there.
            let mask = |v: &Vec<Vec<Complex64>>| -> Vec<Vec<Complex64>> {
                v.iter()
                    .zip(&j)
                    .map(|(row, jr)| {
                        row.iter().zip(jr).map(|(x, &k)| if k { c64(0.0, 0.0) } else { *x }).collect()
                    })
                    .collect()
            };
            let clean = ml_detect(
                &obs(mask(&y.values)),
                &mask(&h),
                &vec![vec![false; 2]; 3],
                0.3,
                0.0,
                &c,
            )
            .unwrap();
            assert_eq!(got.labels, clean.labels);
            // A slot jammed on every hop is a tie only in the limit.
            let always_jammed = (0..2).any(|k| j.iter().all(|r| r[k]));
            if !always_jammed {
                assert_eq!(near.labels, clean.labels);
            }
        }
    }

    #[test]
    fn imperfect_detector_reductions() {
        let psk = Constellation::new(Modulation::Psk, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..300 {
            let (y, h, j) = random_instance(&mut rng, 2, 3);
            let base = ml_detect(&y, &h, &j, 0.2, 0.9, &psk).unwrap();
            let zero = DetectorVariances { noise: 0.2, jam: 0.9, est_err: 0.0 };
            assert_eq!(ml_detect_imperfect(&y, &h, &j, zero, &psk).unwrap(), base);
            // Constant modulus: σ²_ε|s|² = σ²_ε just inflates the noise variance.
            let eps = DetectorVariances { noise: 0.2, jam: 0.9, est_err: 0.05 };
            let inflated = ml_detect(&y, &h, &j, 0.25, 0.9, &psk).unwrap();
            assert_eq!(ml_detect_imperfect(&y, &h, &j, eps, &psk).unwrap(), inflated);
        }
    }

    #[test]
    fn imperfect_detector_matches_brute_force_on_16qam() {
        let c = Constellation::new(Modulation::Qam, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let (y, h, j) = random_instance(&mut rng, 2, 2);
            let var = DetectorVariances { noise: 0.1, jam: 0.4, est_err: 0.08 };
            let got = ml_detect_imperfect(&y, &h, &j, var, &c).unwrap();
            assert_eq!(got.labels, brute_force(&y, &h, &j, var, &c));
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let c = bpsk();
        let y = obs(vec![vec![c64(1.0, 0.0); 2]]);
        assert!(ml_detect(&y, &[vec![c64(1.0, 0.0)]], &[vec![false; 2]], 0.1, 0.1, &c).is_err());
        let s = SymbolVector::from_labels(vec![0], &c);
        assert!(emit(&s, &set(&[0, 1], 4), 4).is_err());
        assert!(emit_dsmh(&s, &set(&[1], 4), 3, 4).is_err());
    }
}
