use rrp_core::signal::*;
use rrp_core::tfr::*;
use rrp_core::rrp::*;
use rrp_core::ridge_fit::*;

fn main() {
    let len = 1024; let n_bins = 256;
    let m1 = ModeSpec::unit(PhaseLaw::Linear { start_hz: 100.0, rate: 120.0 });
    let m2 = ModeSpec::unit(PhaseLaw::Linear { start_hz: 600.0, rate: 200.0 });
    let clean = synthesize(&[m1, m2], len).unwrap();
    for seed in [9u64, 33, 1, 7, 19] {
        let noisy = add_noise(&clean, -5.0, seed).unwrap();
        let w = make_windows(0.03, len, n_bins).unwrap();
        let grid = stft(&noisy, &w).unwrap();
        let qhat = modulation_estimate(&noisy, &w).unwrap();
        let slc = compute_slc(&grid, &qhat).unwrap();
        let rrps = extract_rrps(&slc, &qhat, 2, 8, 1).unwrap();
        let groups = gather(&rrps, &slc, 20);
        let fit = fit_polynomial_ridges(&groups, &slc, 2, 5).unwrap();
        let bin_hz = grid.bin_hz();
        let margin = slc.margin();
        for (mi, (model, mode)) in fit.models.iter().zip([&m1, &m2]).enumerate() {
            let mut worst = 0.0f64; let mut sum2 = 0.0; let mut cnt = 0;
            let mut worst_n = 0;
            for n in margin..len-margin {
                let t = n as f64 / len as f64;
                let e = (model.eval_bins(t)*bin_hz - mode.freq(t)).abs()/bin_hz;
                if e > worst { worst = e; worst_n = n; }
                sum2 += e*e; cnt += 1;
            }
            println!("seed {seed} mode {mi}: worst {worst:.2}@{worst_n} rms {:.3}", (sum2/cnt as f64).sqrt());
        }
    }
    // Spline path on the noiseless exponential.
    let law = PhaseLaw::Exponential { start_hz: 100.0, growth: 1.5 };
    let f = synthesize(&[ModeSpec::unit(law)], len).unwrap();
    let w = make_windows(0.03, len, n_bins).unwrap();
    let grid = stft(&f, &w).unwrap();
    let qhat = modulation_estimate(&f, &w).unwrap();
    let slc = compute_slc(&grid, &qhat).unwrap();
    let rrps = extract_rrps(&slc, &qhat, 1, 8, 1).unwrap();
    let groups = gather(&rrps, &slc, 20);
    for tol in [0.5, 1.0, 2.0] {
        let fit = fit_spline_ridge(&groups, &slc, tol).unwrap();
        let bin_hz = grid.bin_hz();
        let margin = slc.margin();
        let mut worst = 0.0f64; let mut worst_n = 0; let mut sum2 = 0.0; let mut cnt = 0;
        for n in margin..len-margin {
            let t = n as f64 / len as f64;
            let e = (fit.models[0].eval_bins(t)*bin_hz - law.freq(t)).abs()/bin_hz;
            if e > worst { worst = e; worst_n = n; }
            sum2 += e*e; cnt += 1;
        }
        println!("spline tol {tol}: worst {worst:.2}@{worst_n} rms {:.3}", (sum2/cnt as f64).sqrt());
    }
}
