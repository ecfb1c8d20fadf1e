//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; the process exits non-zero if any
//! criterion fails.
//!
//! `cargo test -p tcc-core --test acceptance`

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tcc_core::bench::{
    emit_log, emit_table, evaluate_method, parse_method, FoldSelection, LogEntry, MethodResult, ResultsTable,
    TableFormat,
};
use tcc_core::dataset::{
    dataset_statistics, generate_synthetic_sequence, normalize_raw, sample_illuminant, write_suite, CorrelationStatus,
    DatasetManifest, Drift, SceneSpec, SuiteSpec,
};
use tcc_core::estimators::{gray_edge_family, grayness_index_estimate, GrayEdgeParams};
use tcc_core::net::train::trailing_average;
use tcc_core::net::{
    conv_lstm_step, gradient_check, tcc_net_forward, train, ConvLstmParams, ConvLstmState, FeatureMap, Tensor,
    TccNetConfig, TccNetParams, TrainConfig, TrainingSample,
};
use tcc_core::temporal::{
    kalman_smooth, smoothed_sequence_estimate, temporal_grayness_estimate, FixedNoise, GaussianBelief,
    DEFAULT_TRANSITION_NOISE,
};
use tcc_core::color::summarize_degrees;
use tcc_core::{angular_error, AngularError, Illuminant, LinearImage};

// Pinned tolerances and limits.
const ORTHOGONAL_TOL_DEG: f64 = 1e-9;
const IDENTITY_TOL_DEG: f64 = 1e-6;
const STATS_TOL: f64 = 1e-9;
const ORACLE_SCENE_TOL_DEG: f64 = 0.5;
const SOG_WP_TOL_DEG: f64 = 1.0;
const GI_TOL_DEG: f64 = 1.0;
const TGI_MIN_GAIN_DEG: f64 = 3.0;
const KALMAN_CLOSED_FORM_TOL: f64 = 1e-9;
const SCALAR_LSTM_TOL: f64 = 1e-6;
const GRADCHECK_TOL: f64 = 1e-3;
const OVERFIT_TARGET_DEG: f64 = 0.5;
const SMOOTH_WINDOW: usize = 50;
/// Largest allowed rise between consecutive window-50 averages.
const MONOTONE_TOL_DEG: f64 = 0.01;
const CORRELATION_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn deg(a: Illuminant, b: Illuminant) -> Result<f64, String> {
    angular_error(a, b).map(AngularError::degrees).map_err(err)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn ill(r: f64, g: f64, b: f64) -> Illuminant {
    Illuminant::new(r, g, b).unwrap()
}

// 1. Metric suite.
fn metrics() -> Outcome {
    // Orthogonal vectors are exactly 90 degrees apart.
    for (a, b) in [
        (ill(1.0, 0.0, 0.0), ill(0.0, 1.0, 0.0)),
        (ill(0.0, 0.0, 2.0), ill(0.0, 3.0, 0.0)),
        (ill(1.0, 1.0, 0.0), ill(0.0, 0.0, 5.0)),
    ] {
        let d = deg(a, b)?;
        ensure((d - 90.0).abs() <= ORTHOGONAL_TOL_DEG, || format!("orthogonal pair gave {d}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut max_asym: f64 = 0.0;
    let mut max_scale: f64 = 0.0;
    let mut max_ident: f64 = 0.0;
    for _ in 0..500 {
        let a = sample_illuminant(&mut rng);
        let b = sample_illuminant(&mut rng);
        let ab = deg(a, b)?;
        max_asym = max_asym.max((ab - deg(b, a)?).abs());
        let [r, g, bl] = a.to_array();
        for k in [1e-3, 0.5, 7.0, 1e4] {
            max_scale = max_scale.max((deg(ill(r * k, g * k, bl * k), b)? - ab).abs());
        }
        max_ident = max_ident.max(deg(a, a)?);
        max_ident = max_ident.max(deg(ill(r * 3.0, g * 3.0, bl * 3.0), a)?);
    }
    ensure(max_asym <= 1e-12, || format!("asymmetry {max_asym}"))?;
    ensure(max_scale <= 1e-9, || format!("scale dependence {max_scale}"))?;
    ensure(max_ident <= IDENTITY_TOL_DEG, || format!("identity gave {max_ident}"))?;

    // Hand-computed [mean, median, trimean, best25, worst25, worst5]. Tails
    // hold ceil(n/4) and ceil(n/20) values; quartiles interpolate linearly.
    let cases: [(&[f64], [f64; 6]); 10] = [
        (&[1.0], [1.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
        (&[2.0, 4.0], [3.0, 3.0, 3.0, 2.0, 4.0, 4.0]),
        (&[3.0, 1.0, 2.0], [2.0, 2.0, 2.0, 1.0, 3.0, 3.0]),
        (&[4.0, 1.0, 3.0, 2.0], [2.5, 2.5, 2.5, 1.0, 4.0, 4.0]),
        (&[5.0, 1.0, 4.0, 2.0, 3.0], [3.0, 3.0, 3.0, 1.5, 4.5, 5.0]),
        (&[10.0, 0.0, 7.5, 2.5, 5.0, 1.25], [4.375, 3.75, 3.984375, 0.625, 8.75, 10.0]),
        (&[0.5, 9.0, 3.25, 1.0, 6.0, 2.0, 4.5], [3.75, 3.25, 3.3125, 0.75, 7.5, 9.0]),
        (&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0], [5.5, 5.5, 5.5, 2.0, 9.0, 10.0]),
        (
            &[12.5, 0.1, 3.3, 7.7, 2.2, 0.9, 4.4, 6.6, 5.5, 1.1, 8.8, 9.9],
            [5.25, 4.95, 4.95, 0.7, 10.4, 12.5],
        ),
        (
            &[
                1.5, 4.5, 9.5, 16.5, 2.5, 13.5, 3.5, 18.5, 12.5, 8.5, 6.5, 6.5, 8.5, 12.5, 18.5, 3.5, 13.5, 2.5,
                16.5, 9.5, 4.5, 1.5, 0.5, 1.5, 4.5,
            ],
            [8.06, 6.5, 7.25, 13.5 / 7.0, 109.5 / 7.0, 18.5],
        ),
    ];
    for (i, (values, expected)) in cases.iter().enumerate() {
        let got = summarize_degrees(values).map_err(err)?.as_array();
        for (g, e) in got.iter().zip(expected) {
            ensure((g - e).abs() <= STATS_TOL, || format!("list {i}: got {got:?}, expected {expected:?}"))?;
        }
    }
    Ok(format!("90deg exact, identity <= {max_ident:.1e} deg, 10 summary lists match"))
}

fn scenes(spec: &SceneSpec, count: u64, seed: u64) -> Result<Vec<(Illuminant, LinearImage)>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let truth = sample_illuminant(&mut rng);
            let (rec, mut frames) = generate_synthetic_sequence(spec, truth, 1, seed * 1000 + i, "s").map_err(err)?;
            Ok((rec.illuminant, frames.pop().unwrap()))
        })
        .collect()
}

// 2. Estimator oracle suite.
fn estimator_oracles() -> Outcome {
    let balanced = scenes(&SceneSpec::balanced(), 200, 2)?;
    let gw: Vec<f64> = balanced
        .iter()
        .map(|(t, f)| deg(gray_edge_family(f, &GrayEdgeParams::gray_world()).map_err(err)?, *t))
        .collect::<Result<_, _>>()?;
    let max_white = scenes(&SceneSpec::max_white(), 200, 3)?;
    let mut wp = Vec::new();
    let mut gap = Vec::new();
    for (t, f) in &max_white {
        let w = gray_edge_family(f, &GrayEdgeParams::white_patch()).map_err(err)?;
        let s = gray_edge_family(f, &GrayEdgeParams::shades_of_gray(50.0)).map_err(err)?;
        wp.push(deg(w, *t)?);
        gap.push(deg(w, s)?);
    }
    let (gw, wp, gap) = (mean(&gw), mean(&wp), mean(&gap));
    ensure(gw < ORACLE_SCENE_TOL_DEG, || format!("Gray-World mean {gw:.3} deg"))?;
    ensure(wp < ORACLE_SCENE_TOL_DEG, || format!("White-Patch mean {wp:.3} deg"))?;
    ensure(gap < SOG_WP_TOL_DEG, || format!("SoG(p=50) vs White-Patch mean {gap:.3} deg"))?;
    Ok(format!("GW {gw:.3} deg, WP {wp:.3} deg, |SoG50 - WP| {gap:.3} deg"))
}

// 3. Grayness suite.
fn grayness() -> Outcome {
    let gray_scenes = scenes(&SceneSpec::default(), 100, 4)?;
    let gi: Vec<f64> = gray_scenes
        .iter()
        .map(|(t, f)| deg(grayness_index_estimate(f, 0.001).map_err(err)?, *t))
        .collect::<Result<_, _>>()?;
    let gi = mean(&gi);
    ensure(gi < GI_TOL_DEG, || format!("grayness index mean {gi:.3} deg"))?;

    // Gray content only in the first two frames of each sequence.
    let spec = SceneSpec { redraw_each_frame: true, gray_until: Some(2), ..SceneSpec::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut shot, mut pooled) = (Vec::new(), Vec::new());
    for i in 0..50 {
        let truth = sample_illuminant(&mut rng);
        let (rec, frames) = generate_synthetic_sequence(&spec, truth, 6, 500 + i, "g").map_err(err)?;
        let t = rec.illuminant;
        shot.push(deg(grayness_index_estimate(frames.last().unwrap(), 0.001).map_err(err)?, t)?);
        pooled.push(deg(temporal_grayness_estimate(&frames, 0.001).map_err(err)?.illuminant, t)?);
    }
    let (shot, pooled) = (mean(&shot), mean(&pooled));
    ensure(shot - pooled >= TGI_MIN_GAIN_DEG, || format!("T.GI {pooled:.3} vs shot GI {shot:.3} deg"))?;
    Ok(format!("GI {gi:.3} deg; T.GI {pooled:.3} vs shot-frame GI {shot:.3} deg"))
}

// 4. Kalman smoother.
fn kalman() -> Outcome {
    // (prior mean, prior var, obs mean, obs var, q) -> fused mean, variance
    let cases = [
        ([0.3, 0.4], 1e-3, [0.34, 0.36], 1e-3, 0.0, [0.32, 0.38], 5e-4),
        ([0.3, 0.4], 2e-3, [0.36, 0.31], 1e-3, 1e-4, [0.34, 0.34], 2e-3 / 3.0 + 1e-4),
        ([0.25, 0.5], 3e-3, [0.45, 0.3], 1e-3, 1e-3, [0.4, 0.35], 1.75e-3),
        ([0.1, 0.2], 1.0, [0.3, 0.4], 3.0, 0.5, [0.15, 0.25], 1.25),
    ];
    for (pm, pv, om, ov, q, em, ev) in cases {
        let post = kalman_smooth(
            GaussianBelief::new(pm, pv).map_err(err)?,
            GaussianBelief::new(om, ov).map_err(err)?,
            q,
        )
        .map_err(err)?;
        let ok = (post.mean[0] - em[0]).abs() <= KALMAN_CLOSED_FORM_TOL
            && (post.mean[1] - em[1]).abs() <= KALMAN_CLOSED_FORM_TOL
            && (post.variance - ev).abs() <= KALMAN_CLOSED_FORM_TOL;
        ensure(ok, || format!("update {pm:?}/{om:?} gave {post:?}"))?;
    }

    let base = |f: &LinearImage| gray_edge_family(f, &GrayEdgeParams::gray_world());
    let noise = FixedNoise::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    let constant = SceneSpec { redraw_each_frame: true, noise_sigma: 0.01, ..SceneSpec::default() };
    let (mut smoothed, mut per_frame) = (Vec::new(), Vec::new());
    for i in 0..100 {
        let truth = sample_illuminant(&mut rng);
        let (rec, frames) = generate_synthetic_sequence(&constant, truth, 8, 600 + i, "k").map_err(err)?;
        let est = smoothed_sequence_estimate(&frames, &base, &noise, DEFAULT_TRANSITION_NOISE).map_err(err)?;
        smoothed.push(deg(est.illuminant, rec.illuminant)?);
        for (_, e) in &est.per_frame {
            per_frame.push(deg(*e, rec.illuminant)?);
        }
    }
    let (smoothed, per_frame) = (mean(&smoothed), mean(&per_frame));
    ensure(smoothed <= per_frame, || format!("constant: smoothed {smoothed:.3} > per-frame {per_frame:.3}"))?;

    // The illuminant switches on the shot frame.
    let (mut abrupt_smoothed, mut abrupt_shot) = (Vec::new(), Vec::new());
    for i in 0..50 {
        let start = sample_illuminant(&mut rng);
        let mut end = sample_illuminant(&mut rng);
        while deg(start, end)? < 5.0 {
            end = sample_illuminant(&mut rng);
        }
        let spec = SceneSpec { redraw_each_frame: true, drift: Drift::Step { at: 7, end }, ..SceneSpec::balanced() };
        let (rec, frames) = generate_synthetic_sequence(&spec, start, 8, 700 + i, "a").map_err(err)?;
        let est = smoothed_sequence_estimate(&frames, &base, &noise, DEFAULT_TRANSITION_NOISE).map_err(err)?;
        abrupt_smoothed.push(deg(est.illuminant, rec.illuminant)?);
        abrupt_shot.push(deg(base(frames.last().unwrap()).map_err(err)?, rec.illuminant)?);
    }
    let (abrupt_smoothed, abrupt_shot) = (mean(&abrupt_smoothed), mean(&abrupt_shot));
    ensure(abrupt_smoothed > abrupt_shot, || {
        format!("abrupt: smoothed {abrupt_smoothed:.3} <= shot {abrupt_shot:.3}")
    })?;
    Ok(format!(
        "closed form ok; constant: smoothed {smoothed:.3} <= per-frame {per_frame:.3} deg; \
         abrupt: smoothed {abrupt_smoothed:.3} > shot {abrupt_shot:.3} deg"
    ))
}

// 5. ConvLSTM correctness.
fn conv_lstm() -> Outcome {
    let mut p = ConvLstmParams::zeros(1, 1, 1).map_err(err)?;
    let vals = [0.8, -0.5, 0.3, 0.6, -0.2, 0.9, 1.1, -0.7, 0.25, -0.4, 0.15, 0.1, 0.5, -0.3, 0.2];
    {
        let mut slots = p.tensors_mut();
        for ((_, t), v) in slots.iter_mut().zip(vals) {
            **t = Tensor::filled(t.dims(), v);
        }
    }
    let [wxi, whi, wxf, whf, wxc, whc, wxo, who, wci, wcf, wco, bi, bf, bc, bo] = vals;
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    // A 2x2 map of independent scalar cells.
    let xs = [[0.7, -1.2, 0.0, 2.0], [-0.4, 0.3, 1.5, -0.9], [1.3, 0.6, -2.2, 0.05]];
    let mut h = [0.0f64; 4];
    let mut c = [0.0f64; 4];
    let mut state = ConvLstmState::zeros(1, 2, 2);
    let mut worst: f64 = 0.0;
    for x in xs {
        for k in 0..4 {
            let i = sig(wxi * x[k] + whi * h[k] + wci * c[k] + bi);
            let f = sig(wxf * x[k] + whf * h[k] + wcf * c[k] + bf);
            let cn = f * c[k] + i * (wxc * x[k] + whc * h[k] + bc).tanh();
            let o = sig(wxo * x[k] + who * h[k] + wco * cn + bo);
            c[k] = cn;
            h[k] = o * cn.tanh();
        }
        let input = FeatureMap::from_vec(1, 2, 2, x.to_vec()).map_err(err)?;
        state = conv_lstm_step(&input, &state, &p).map_err(err)?;
        for k in 0..4 {
            worst = worst.max((state.hidden.data[k] - h[k]).abs()).max((state.cell.data[k] - c[k]).abs());
        }
    }
    ensure(worst <= SCALAR_LSTM_TOL, || format!("scalar oracle deviation {worst:e}"))?;

    let config = TccNetConfig::tiny();
    ensure(config.branches == 2 && !config.share_backbone, || "tiny preset is not two-branch".into())?;
    let params = TccNetParams::init(&config, 3).map_err(err)?;
    let spec = SceneSpec { width: 24, height: 24, ..SceneSpec::default() };
    let (_, frames) = generate_synthetic_sequence(&spec, ill(0.3, 0.5, 0.2), 3, 9, "gc").map_err(err)?;
    let report = gradient_check(&frames, &config, &params, ill(0.5, 0.3, 0.4), 1e-4).map_err(err)?;
    let max = report.max_relative_error();
    ensure(report.passed(GRADCHECK_TOL), || {
        let worst = report.tensors.iter().max_by(|a, b| a.relative_error.total_cmp(&b.relative_error)).unwrap();
        format!("gradcheck max relative error {max:.2e} in {}", worst.name)
    })?;
    Ok(format!(
        "scalar oracle {worst:.1e}; gradcheck {} tensors, max rel {max:.2e}",
        report.tensors.len()
    ))
}

fn overfit_data() -> Result<Vec<TrainingSample>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    (0..4)
        .map(|i| {
            let illuminant = sample_illuminant(&mut rng);
            let (_, frames) =
                generate_synthetic_sequence(&SceneSpec::default(), illuminant, 3, i, "o").map_err(err)?;
            Ok(TrainingSample { frames, illuminant })
        })
        .collect()
}

// 6. Trainability.
fn trainability() -> Outcome {
    let data = overfit_data()?;
    let config = TccNetConfig::tiny();
    // RMSprop at ten times the full-scale learning rate, no augmentation.
    let hyper = TrainConfig { epochs: 500, learning_rate: 3e-4, augmentation: None, seed: 0, ..TrainConfig::default() };
    let (_, report) = train(&data, &config, &hyper).map_err(err)?;
    let final_err = *report.clean_loss.last().unwrap();
    let smooth = trailing_average(&report.clean_loss, SMOOTH_WINDOW);
    let max_rise = smooth.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    ensure(final_err < OVERFIT_TARGET_DEG, || format!("final training error {final_err:.3} deg"))?;
    ensure(max_rise <= MONOTONE_TOL_DEG, || format!("smoothed curve rises by {max_rise:.2e} deg"))?;
    Ok(format!(
        "lr {} rho {} epochs {}: {:.3} -> {final_err:.3} deg, max smoothed rise {max_rise:.1e} deg",
        hyper.learning_rate, hyper.rms_decay, hyper.epochs, report.clean_loss[0]
    ))
}

// 7. Variable-length contract.
fn variable_length() -> Outcome {
    let lengths = [1usize, 3, 5, 17];
    let spec = SceneSpec { width: 32, height: 32, ..SceneSpec::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data = lengths
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let illuminant = sample_illuminant(&mut rng);
            let (_, frames) = generate_synthetic_sequence(&spec, illuminant, n, 800 + i as u64, "v").map_err(err)?;
            Ok(TrainingSample { frames, illuminant })
        })
        .collect::<Result<Vec<_>, String>>()?;
    for config in [TccNetConfig::tiny(), TccNetConfig::desk()] {
        let params = TccNetParams::init(&config, 1).map_err(err)?;
        for s in &data {
            let out = tcc_net_forward(&s.frames, &config, &params).map_err(err)?;
            let n = s.frames.len();
            ensure(out.steps == vec![n; config.branches], || format!("length {n}: steps {:?}", out.steps))?;
        }
    }
    let hyper = TrainConfig { epochs: 3, learning_rate: 3e-4, ..TrainConfig::default() };
    let (_, report) = train(&data, &TccNetConfig::tiny(), &hyper).map_err(err)?;
    ensure(report.epoch_loss.iter().all(|l| l.is_finite()), || "non-finite training loss".into())?;
    Ok(format!("lengths {lengths:?}: steps match on both branches; 3 augmented epochs trained"))
}

fn tccbench(args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tccbench")).args(args).output().map_err(err)?;
    ensure(out.status.success(), || format!("tccbench {args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok(out)
}

fn golden_row(method: &str, errors: &[Option<f64>]) -> Result<MethodResult, String> {
    let log = errors
        .iter()
        .enumerate()
        .map(|(i, e)| LogEntry {
            id: format!("s{i}"),
            error_degrees: *e,
            failure: e.is_none().then(|| "degenerate-image: flat".to_string()),
        })
        .collect();
    MethodResult::from_log(method.into(), log).map_err(err)
}

// 8. Harness determinism and format.
fn harness() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let data = dir.path().join("data");
    let d = data.to_str().unwrap();
    tccbench(&["synth", "--out", d, "--count", "8", "--lengths", "2,4", "--seed", "3", "--width", "48", "--height", "48"])?;
    let manifest = data.join("manifest.jsonl");
    let run = |tag: &str| -> Result<(Vec<u8>, Vec<u8>, Vec<u8>), String> {
        let table = dir.path().join(format!("table{tag}.csv"));
        let log = dir.path().join(format!("log{tag}.csv"));
        tccbench(&[
            "eval", "--manifest", manifest.to_str().unwrap(), "--seed", "11", "--format", "csv",
            "--method", "oracle", "--method", "gray-world", "--method", "grayness-index", "--method", "t-gi",
            "--method", "kalman --base shades-of-gray", "--method", "moving-average --base grey-edge-1",
            "--table", table.to_str().unwrap(), "--log", log.to_str().unwrap(),
        ])?;
        let stdout = tccbench(&["eval", "--manifest", manifest.to_str().unwrap(), "--seed", "11", "--method", "gray-world"])?
            .stdout;
        Ok((std::fs::read(&table).map_err(err)?, std::fs::read(&log).map_err(err)?, stdout))
    };
    let first = run("a")?;
    let second = run("b")?;
    ensure(first == second, || "eval output differs between runs".into())?;

    let m = DatasetManifest::load(&manifest).map_err(err)?;
    let oracle = parse_method("oracle").map_err(err)?;
    let r = evaluate_method(&m, FoldSelection::All, oracle.as_ref(), 0).map_err(err)?;
    let stats = r.stats.ok_or("oracle produced no statistics")?;
    ensure(r.failures == 0 && stats.as_array().iter().all(|&v| v == 0.0), || format!("oracle stats {stats:?}"))?;

    let table = ResultsTable {
        rows: vec![
            golden_row("Gray-World", &[Some(1.0), Some(2.0), Some(3.0), Some(4.0), None])?,
            golden_row("Edge", &[Some(0.5), Some(7.3), Some(3.1), None, None])?,
            golden_row("Broken", &[None; 5])?,
        ],
    };
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for (file, bytes) in [
        ("table.md", emit_table(&table, TableFormat::Markdown).map_err(err)?),
        ("table.csv", emit_table(&table, TableFormat::Csv).map_err(err)?),
        ("log.csv", emit_log(&table).map_err(err)?),
    ] {
        let expected = std::fs::read(golden.join(file)).map_err(err)?;
        ensure(bytes == expected, || format!("{file} differs:\n{}", String::from_utf8_lossy(&bytes)))?;
    }

    ensure(normalize_raw(256) == 0.0 && normalize_raw(4095) == 1.0, || "raw normalization endpoints".into())?;
    Ok("two eval runs byte-identical; oracle all zero; 3 golden files match; raw 256->0, 4095->1".into())
}

// 9. Dataset statistics.
fn dataset_stats() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let suite = SuiteSpec {
        count: 10,
        lengths: vec![1, 2, 3, 4, 10],
        scene: SceneSpec { width: 16, height: 16, ..SceneSpec::default() },
        seed: 9,
    };
    write_suite(&suite, dir.path()).map_err(err)?;
    let m = DatasetManifest::load(dir.path().join("manifest.jsonl")).map_err(err)?;
    let s = dataset_statistics(&m).map_err(err)?;
    // Lengths 1,2,3,4,10 twice: mean 40/10, median of 3 and 3.
    ensure(s.mean_length == 4.0 && s.median_length == 3.0, || {
        format!("mean {} median {}", s.mean_length, s.median_length)
    })?;

    // r chromaticity rises linearly with length at fixed g, so b falls linearly.
    let records = (0..12)
        .map(|i| {
            let len = 1 + 2 * i;
            let truth = Illuminant::from_chromaticity(0.2 + 0.01 * len as f64, 0.35).map_err(err)?;
            let (mut rec, _) = generate_synthetic_sequence(&suite.scene, truth, len, i as u64, &format!("c{i}"))
                .map_err(err)?;
            rec.id = format!("c{i}");
            Ok(rec)
        })
        .collect::<Result<Vec<_>, String>>()?;
    let linear = DatasetManifest::new(records, dir.path()).map_err(err)?;
    let c = dataset_statistics(&linear).map_err(err)?.length_chroma_correlation;
    ensure((c[0].value - 1.0).abs() <= CORRELATION_TOL, || format!("r correlation {}", c[0].value))?;
    ensure((c[2].value + 1.0).abs() <= CORRELATION_TOL, || format!("b correlation {}", c[2].value))?;
    ensure(c[1].status != CorrelationStatus::Defined || c[1].value.abs() <= 1e-6, || {
        format!("constant g correlation {:?}", c[1])
    })?;
    Ok(format!("mean 4, median 3; r = {:.12}, b = {:.12}", c[0].value, c[2].value))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("metric suite", Duration::from_secs(1), metrics),
        ("estimator oracles", Duration::from_secs(30), estimator_oracles),
        ("grayness suite", Duration::from_secs(60), grayness),
        ("kalman smoother", Duration::from_secs(600), kalman),
        ("convlstm correctness", Duration::from_secs(300), conv_lstm),
        ("trainability", Duration::from_secs(600), trainability),
        ("variable length", Duration::from_secs(600), variable_length),
        ("harness determinism and format", Duration::from_secs(600), harness),
        ("dataset statistics", Duration::from_secs(600), dataset_stats),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= *limit {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {elapsed:.1?}, limit {limit:?}"))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{elapsed:.1?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail} [{elapsed:.1?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
