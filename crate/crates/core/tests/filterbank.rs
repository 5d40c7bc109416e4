use std::f64::consts::PI;
use std::sync::Arc;

use proxsaf::experiments::seeded_rng;
use proxsaf::filterbank::{estimate_subband_statistics, AnalysisBank, PrototypeFilter};
use rand::Rng;
use rand_distr::StandardNormal;

fn magnitude(taps: &[f64], omega: f64) -> f64 {
    let (re, im) = taps
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(re, im), (n, h)| {
            (
                re + h * (omega * n as f64).cos(),
                im - h * (omega * n as f64).sin(),
            )
        });
    re.hypot(im)
}

#[test]
fn builtin_prototypes_reject_the_stopband() {
    for (n, l) in [(2, 17), (4, 33), (8, 65)] {
        let bank = AnalysisBank::builtin(n).unwrap();
        let p = bank.prototype().coefficients();
        assert_eq!(p.len(), l);
        let dc = magnitude(p, 0.0);
        let grid = 20_000;
        let edge = PI / n as f64;
        let worst = (0..=grid)
            .map(|j| edge + (PI - edge) * j as f64 / grid as f64)
            .map(|w| magnitude(p, w))
            .fold(0.0f64, f64::max);
        let attenuation = 20.0 * (dc / worst).log10();
        assert!(attenuation >= 60.0, "N={n}: {attenuation:.2} dB");
    }
}

#[test]
fn white_input_splits_power_by_filter_energy() {
    let bank = Arc::new(AnalysisBank::builtin(4).unwrap());
    let mut rng = seeded_rng(8, 0);
    let stats =
        estimate_subband_statistics(&bank, || rng.sample::<f64, _>(StandardNormal), 8, 50_000)
            .unwrap();
    for (v, e) in stats.input_variances.iter().zip(bank.energies()) {
        assert!((v / e - 1.0).abs() < 0.05, "variance {v} vs energy {e}");
    }
}

#[test]
fn prototype_file_rebuilds_the_same_bank() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("proto.txt");
    let bank = AnalysisBank::builtin(8).unwrap();
    std::fs::write(&path, bank.prototype().to_text()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("N=8 L=65\n"));
    let loaded = AnalysisBank::modulate_cosine(PrototypeFilter::load(&path).unwrap());
    assert_eq!(loaded.filters(), bank.filters());
}
