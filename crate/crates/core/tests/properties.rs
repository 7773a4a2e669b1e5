use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use risim::geometry::{array_response, ArrayGeometry, Direction, WaveParams};
use risim::scenario::parking_preset;
use risim::signal::{
    achievable_rate, beam_sweep, synthesize_channels, InteractionVector, NoiseKey, OfdmConfig,
};

fn wave() -> WaveParams {
    WaveParams::from_frequency(5.8e9).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Shifting a subarray by one pitch only rotates its response by a common phase.
    #[test]
    fn translation_is_a_global_phase(theta in 0.0f64..=90.0, phi in 0.0f64..360.0) {
        let g = ArrayGeometry::default();
        let dir = Direction::new(theta, phi).unwrap();
        let a = array_response(&g, &wave(), dir);
        let (u, v) = dir.uv();
        let k = wave().wavenumber();
        let step_x = Complex64::from_polar(1.0, -k * g.spacing_x_m() * u);
        let step_y = Complex64::from_polar(1.0, -k * g.spacing_y_m() * v);
        let nx = g.elements_x();
        for n in 0..g.elements_y() {
            for m in 0..nx - 1 {
                let d = a[n * nx + m + 1] - a[n * nx + m] * step_x;
                prop_assert!(d.norm() < 1e-9);
            }
        }
        for n in 0..g.elements_y() - 1 {
            let d = a[(n + 1) * nx] - a[n * nx] * step_y;
            prop_assert!(d.norm() < 1e-9);
        }
    }

    // At zero noise the trained codeword also maximizes the achievable rate.
    #[test]
    fn selected_codeword_maximizes_rate(angle in 0.0f64..60.0, radius in 6.0f64..30.0) {
        let s = parking_preset();
        let book = s.build_codebook().unwrap();
        let states = s.states().unwrap();
        let ofdm = OfdmConfig { noise_variance_w: 0.0, ..s.ofdm() };
        let rho = s.ofdm().rho();
        let (sa, ca) = angle.to_radians().sin_cos();
        let ue = [radius * ca, radius * sa, 1.5];
        let ch = synthesize_channels(&s.link_geometry(ue, true).unwrap(), &ofdm).unwrap();
        let sel = beam_sweep(&book, &states, &ch, &ofdm, NoiseKey::default()).unwrap().selected;
        let rate = |i: usize| achievable_rate(&ch, &InteractionVector::from_codeword(&book.codewords[i], &states), rho).unwrap();
        let best = rate(sel);
        for i in 0..book.len() {
            prop_assert!(best >= rate(i) - 1e-9, "codeword {} beats selected {}", i, sel);
        }
    }
}

#[test]
fn translation_example_matches_hand_value() {
    let g = ArrayGeometry::default();
    let dir = Direction::azimuth(60.0).unwrap();
    let a = array_response(&g, &wave(), dir);
    let ratio = a[1] / a[0];
    // k0 * 25.85 mm * sin 60 = 2.7212 rad
    assert_relative_eq!(-ratio.arg(), 2.7212, max_relative = 1e-4);
}
