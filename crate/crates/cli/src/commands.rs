use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use rgbw_core::datagen::derive_seed;
use rgbw_core::harness::{render_leaderboard_json, render_leaderboard_text, run_algorithm, MEASURED_HEIGHT, MEASURED_WIDTH};
use rgbw_core::metrics::score_pair_with;
use rgbw_core::noise::{DEFAULT_READ_SIGMA, DEFAULT_SHOT_K};
use rgbw_core::raw_io::{raw_from_pgm16, read_pgm16, write_rgb_png};
use rgbw_core::remosaic::{train_filter_bank_detailed, SolverChoice};
use rgbw_core::{
    build_manifest, estimate_64m_runtime, evaluate, generate_pair_with, generate_synthetic_scene, load_raw,
    measure_runtime, mosaic, rank_leaderboard, run_isp, save_raw, synthesize_noise, synthetic_pairs, write_pairs,
    Algorithm, BankSet, CfaDescriptor, CfaRegistry, DatasetReport, EvalConfig, FilterBank, IspConfig,
    LeaderboardRow, LpipsPolicy, LpipsProvider, ManifestOptions, NoiseProfile, PairConfig, PairSample, RawImage,
    SceneKind, Split, SyntheticSetSpec, ToolkitConfig, TrainOptions, CHALLENGE_GAINS_DB,
};

use crate::{
    AddNoiseArgs, AlgorithmName, BankArgs, BenchArgs, Cli, Command, GenDataArgs, IspArgs, IspOverrides,
    LeaderboardArgs, RemosaicArgs, ScoreArgs, SolverName, TrainArgs,
};

const DEFAULT_SEED: u64 = 2022;

#[derive(Debug)]
pub enum CliError {
    Core(rgbw_core::Error),
    Usage(String),
    /// The run finished but some images could not be scored.
    ImageFailures { failed: usize, total: usize },
}

impl CliError {
    /// 2 for anything the user can fix in the inputs, 3 for per-image
    /// failures, 1 for I/O and external-process trouble.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(rgbw_core::Error::Io(_))
            | CliError::Core(rgbw_core::Error::FileIo { .. })
            | CliError::Core(rgbw_core::Error::Provider { .. }) => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::ImageFailures { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => f.write_str(m),
            CliError::ImageFailures { failed, total } => write!(f, "{failed} of {total} images failed"),
        }
    }
}

impl From<rgbw_core::Error> for CliError {
    fn from(e: rgbw_core::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(rgbw_core::Error::FileIo {
        path: path.to_path_buf(),
        source: e,
    })
}

struct Ctx {
    cfg: ToolkitConfig,
    seed: u64,
}

pub fn run(cli: Cli) -> CliResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let cfg = match &cli.config {
        Some(path) => ToolkitConfig::load(path)?,
        None => ToolkitConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let ctx = Ctx { cfg, seed };
    match cli.command {
        Command::GenData(a) => gen_data(&ctx, a),
        Command::AddNoise(a) => add_noise(&ctx, a),
        Command::Remosaic(a) => remosaic(a),
        Command::Train(a) => train(&ctx, a),
        Command::Isp(a) => isp(&ctx, a),
        Command::Score(a) => score(&ctx, a),
        Command::Bench(a) => bench(&ctx, a),
        Command::Leaderboard(a) => leaderboard(a),
    }
}

fn load_capture(args: &GenDataArgs, path: &Path) -> CliResult<RawImage> {
    if path.extension().and_then(|e| e.to_str()) == Some("pgm") {
        let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
        let pgm = read_pgm16(&bytes)?;
        Ok(raw_from_pgm16(&pgm, args.capture_cfa.clone(), args.black_level, args.white_level)?)
    } else {
        Ok(load_raw(path, &CfaRegistry::builtin())?)
    }
}

fn gen_data(ctx: &Ctx, args: GenDataArgs) -> CliResult {
    let registry = ctx.cfg.noise_registry()?;
    let pair_cfg = PairConfig {
        demosaic: args.demosaic.unwrap_or(ctx.cfg.isp.demosaic),
        ..PairConfig::default()
    };
    let samples = match &args.capture {
        Some(path) => {
            let capture = load_capture(&args, path)?;
            let scene_id = match &args.scene_id {
                Some(s) => s.clone(),
                None => path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| CliError::Usage(format!("cannot derive a scene id from {}", path.display())))?
                    .to_string(),
            };
            if scene_id.is_empty() || scene_id.contains(['/', '\\']) {
                return Err(CliError::Usage(format!("invalid scene id `{scene_id}`")));
            }
            let cfg = PairConfig {
                input_cfa: capture.cfa().clone(),
                ..pair_cfg
            };
            let clean = generate_pair_with(&capture, &cfg, &scene_id)?;
            args.gains
                .iter()
                .map(|&g| {
                    let profile = registry.profile_for_gain(g)?;
                    let noisy = synthesize_noise(&clean.input_rgbw, &profile, derive_seed(&[ctx.seed, g.to_bits()]))?;
                    PairSample::new(noisy, clean.gt_bayer.clone(), scene_id.clone(), g)
                })
                .collect::<rgbw_core::Result<Vec<_>>>()?
        }
        None => {
            if args.scenes == 0 {
                return Err(CliError::Usage("--scenes must be at least 1".into()));
            }
            let spec = SyntheticSetSpec {
                split: args.split,
                scenes: args.scenes,
                size: args.size,
                gains_db: args.gains.clone(),
                seed: ctx.seed,
                pair: pair_cfg,
            };
            synthetic_pairs(&spec, &registry)?
        }
    };
    write_pairs(&args.out, args.split, &samples)?;
    let mut scenes: Vec<&str> = samples.iter().map(|s| s.scene_id.as_str()).collect();
    scenes.dedup();
    println!(
        "wrote {} inputs and {} ground truths to {}",
        samples.len(),
        scenes.len(),
        args.out.join(args.split.as_str()).display()
    );
    Ok(())
}

fn add_noise(ctx: &Ctx, args: AddNoiseArgs) -> CliResult {
    let img = load_raw(&args.input, &CfaRegistry::builtin())?;
    let base = match ctx.cfg.noise_registry()?.profile_for_gain(args.gain) {
        Ok(p) => p,
        Err(rgbw_core::Error::UnregisteredGain(_)) => NoiseProfile::new(args.gain, DEFAULT_READ_SIGMA, DEFAULT_SHOT_K)?,
        Err(e) => return Err(e.into()),
    };
    let profile = NoiseProfile::new(
        args.gain,
        args.read_sigma.unwrap_or(base.read_sigma),
        args.shot_k.unwrap_or(base.shot_k),
    )?;
    let noisy = synthesize_noise(&img, &profile, derive_seed(&[ctx.seed, args.gain.to_bits()]))?;
    save_raw(&args.output, &noisy)?;
    Ok(())
}

fn parse_gain_path(spec: &str) -> CliResult<(f64, &str)> {
    let (g, p) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("expected GAIN=PATH, got `{spec}`")))?;
    let g: f64 = g
        .trim()
        .trim_end_matches("dB")
        .parse()
        .map_err(|_| CliError::Usage(format!("bad gain in `{spec}`")))?;
    Ok((g, p))
}

fn bank_set(args: &BankArgs) -> CliResult<Option<BankSet>> {
    let mut set = BankSet::default();
    for spec in &args.bank_gain {
        let (g, p) = parse_gain_path(spec)?;
        if set.per_gain.iter().any(|(x, _)| *x == g) {
            return Err(CliError::Usage(format!("two banks given for {g} dB")));
        }
        set.per_gain.push((g, FilterBank::load(p)?));
    }
    if let Some(p) = &args.bank {
        set.fallback = Some(FilterBank::load(p)?);
    }
    Ok((set.fallback.is_some() || !set.per_gain.is_empty()).then_some(set))
}

fn algorithm(name: AlgorithmName, banks: &BankArgs) -> CliResult<Algorithm> {
    let set = bank_set(banks)?;
    match (name, set) {
        (AlgorithmName::Nearest, _) => Ok(Algorithm::Nearest),
        (AlgorithmName::WhiteGuided, _) => Ok(Algorithm::WhiteGuided),
        (AlgorithmName::FilterBank, Some(set)) => Ok(Algorithm::FilterBank(Arc::new(set))),
        (AlgorithmName::FilterBank, None) => Err(CliError::Usage(
            "filter-bank needs --bank or --bank-gain".into(),
        )),
    }
}

fn remosaic(args: RemosaicArgs) -> CliResult {
    let input = load_raw(&args.input, &CfaRegistry::builtin())?;
    let alg = algorithm(args.algorithm, &args.banks)?;
    let out = run_algorithm(&alg, &input, args.gain, &args.cfa_out, None)?;
    save_raw(&args.output, &out)?;
    Ok(())
}

fn train(ctx: &Ctx, args: TrainArgs) -> CliResult {
    let opts = ManifestOptions {
        splits: vec![args.split],
        expected_gains: if args.gains.is_empty() {
            CHALLENGE_GAINS_DB.to_vec()
        } else {
            args.gains.clone()
        },
    };
    let manifest = build_manifest(&args.data, &opts)?;
    let manifest = manifest.filter(|e| args.gains.is_empty() || args.gains.contains(&e.gain_db));
    let registry = CfaRegistry::builtin();
    let mut pairs = Vec::new();
    for e in &manifest.entries {
        let Some(gt) = &e.gt else {
            eprintln!("warning: {}: no ground truth, skipped", e.input.display());
            continue;
        };
        pairs.push(PairSample::new(
            load_raw(&e.input, &registry)?,
            load_raw(gt, &registry)?,
            e.scene_id.clone(),
            e.gain_db,
        )?);
    }
    if pairs.is_empty() {
        return Err(CliError::Usage(format!("no training pairs under {}", args.data.display())));
    }
    let solver = match args.solver {
        SolverName::Auto => SolverChoice::Auto,
        SolverName::Cholesky => SolverChoice::Cholesky,
        SolverName::Cg => SolverChoice::ConjugateGradient,
    };
    let opts = TrainOptions {
        patch_radius: args.radius.unwrap_or(ctx.cfg.train.patch_radius),
        lambda: args.lambda.unwrap_or(ctx.cfg.train.lambda),
        solver,
        ..TrainOptions::default()
    };
    let report = train_filter_bank_detailed(&pairs, &opts)?;
    report.bank.save(&args.out)?;
    println!(
        "trained {} phases x {} taps on {} pairs (radius {}, lambda {:e})",
        report.bank.phases(),
        report.bank.taps(),
        pairs.len(),
        opts.patch_radius,
        opts.lambda
    );
    for fit in &report.fits {
        println!(
            "  phase {:>2}: {:>9} rows  {:?}  residual {:.3e}",
            fit.phase, fit.rows, fit.solver, fit.relative_residual
        );
    }
    if let Some(path) = &args.fit_report {
        let text = serde_json::to_string_pretty(&report.fits).map_err(rgbw_core::Error::from)?;
        std::fs::write(path, text).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

fn isp_config(ctx: &Ctx, o: &IspOverrides) -> CliResult<IspConfig> {
    let mut cfg = ctx.cfg.isp.clone();
    if let Some(d) = o.demosaic {
        cfg.demosaic = d;
    }
    if let Some(wb) = &o.wb {
        cfg.wb_gains = [wb[0], wb[1], wb[2]];
    }
    if let Some(t) = o.transfer {
        cfg.transfer = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn isp(ctx: &Ctx, args: IspArgs) -> CliResult {
    let cfg = isp_config(ctx, &args.isp)?;
    let bayer = load_raw(&args.input, &CfaRegistry::builtin())?;
    let png = write_rgb_png(&run_isp(&bayer, &cfg)?)?;
    std::fs::write(&args.output, png).map_err(|e| io_err(&args.output, e))?;
    Ok(())
}

fn lpips_policy(ctx: &Ctx, args: &ScoreArgs) -> CliResult<LpipsPolicy> {
    if let Some(t) = args.lpips_timeout {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--lpips-timeout must be positive, got {t}")));
        }
    }
    match &args.lpips_provider {
        Some(cmd) => {
            let section = ctx.cfg.lpips.as_ref();
            let timeout = args
                .lpips_timeout
                .or(section.map(|s| s.timeout_s))
                .map(Duration::from_secs_f64)
                .unwrap_or(rgbw_core::metrics::DEFAULT_PROVIDER_TIMEOUT);
            let provider = LpipsProvider::new(cmd)?
                .with_timeout(timeout)
                .reentrant(section.is_some_and(|s| s.reentrant));
            Ok(LpipsPolicy::External(Arc::new(provider)))
        }
        None => Ok(ctx.cfg.lpips_policy()?),
    }
}

fn score(ctx: &Ctx, args: ScoreArgs) -> CliResult {
    let isp = isp_config(ctx, &args.isp)?;
    let lpips = lpips_policy(ctx, &args)?;
    let registry = CfaRegistry::builtin();
    if let (Some(pred), Some(gt)) = (&args.pred, &args.gt) {
        let report = score_pair_with(
            &load_raw(pred, &registry)?,
            &load_raw(gt, &registry)?,
            &isp,
            &lpips,
            &ctx.cfg.metrics,
        )?;
        let text = serde_json::to_string_pretty(&report).map_err(rgbw_core::Error::from)?;
        return emit(args.report.as_deref(), &text);
    }
    let Some(data) = &args.data else {
        return Err(CliError::Usage("score needs --pred/--gt or --data".into()));
    };
    let opts = ManifestOptions {
        splits: if args.split.is_empty() {
            Split::ALL.to_vec()
        } else {
            args.split.clone()
        },
        ..ManifestOptions::default()
    };
    let manifest = build_manifest(data, &opts)?;
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = manifest.filter(|e| args.gains.is_empty() || args.gains.contains(&e.gain_db));
    if manifest.is_empty() {
        return Err(CliError::Usage("no manifest entries match the requested gains".into()));
    }
    let alg = algorithm(args.algorithm, &args.banks)?;
    let cfg = EvalConfig {
        isp,
        knobs: ctx.cfg.metrics.clone(),
        lpips,
        registry,
    };
    let report = evaluate(&manifest, &alg, &cfg)?;
    emit(args.report.as_deref(), &report.to_json()?)?;
    for g in &report.report.per_gain {
        let s = &g.summary;
        eprintln!(
            "{:>5} dB  n={:<3} PSNR {:.3}  SSIM {:.4}  KLD {:.4}  M4 {:.3} (mean-of-m4) {:.3} (m4-of-means)",
            g.gain_db, s.count, s.psnr, s.ssim, s.kld, s.m4_mean_of_m4, s.m4_of_means
        );
    }
    for img in report.report.images.iter().filter(|i| i.error.is_some()) {
        eprintln!(
            "failed: {} at {} dB: {}",
            img.scene_id,
            img.gain_db,
            img.error.as_deref().unwrap_or_default()
        );
    }
    match report.failures() {
        0 => Ok(()),
        failed => Err(CliError::ImageFailures {
            failed,
            total: report.report.images.len(),
        }),
    }
}

fn emit(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn bench(ctx: &Ctx, args: BenchArgs) -> CliResult {
    if let Some(measured) = args.estimate {
        let est = estimate_64m_runtime(measured, args.width, args.height)?;
        if args.json {
            println!(
                "{}",
                serde_json::json!({
                    "measured_s": measured,
                    "width": args.width,
                    "height": args.height,
                    "estimate_64m_s": est,
                })
            );
        } else {
            println!("{measured} s at {}x{} -> {est:.1} s at 64 MP", args.width, args.height);
        }
        return Ok(());
    }
    let input = match &args.input {
        Some(p) => load_raw(p, &CfaRegistry::builtin())?,
        None => {
            let scene = generate_synthetic_scene(SceneKind::NoiseField, args.width, args.height, ctx.seed)?;
            mosaic(&scene, &CfaDescriptor::rgbw_default())?
        }
    };
    let alg = algorithm(args.algorithm, &args.banks)?;
    let m = measure_runtime(&alg, &input, args.gain, &args.cfa_out, args.repeats)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&m).map_err(rgbw_core::Error::from)?);
    } else {
        println!("{} on {}x{} (median of {})", m.algorithm, m.width, m.height, m.repeats);
        println!(
            "  single thread   : {:.4} s  -> {:.1} s at 64 MP",
            m.single_thread_s, m.single_thread_64m_s
        );
        println!(
            "  pool of {:<2} thr : {:.4} s  -> {:.1} s at 64 MP",
            m.threads, m.multi_thread_s, m.multi_thread_64m_s
        );
    }
    Ok(())
}

fn parse_row(spec: &str) -> CliResult<LeaderboardRow> {
    let bad = || CliError::Usage(format!("expected NAME:PSNR,SSIM,LPIPS,KLD, got `{spec}`"));
    let (name, nums) = spec.rsplit_once(':').ok_or_else(bad)?;
    let parts: Vec<&str> = nums.split(',').map(str::trim).collect();
    if name.is_empty() || parts.len() != 4 {
        return Err(bad());
    }
    let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    let lpips = if parts[2] == "-" { None } else { Some(num(parts[2])?) };
    Ok(LeaderboardRow::from_means(name, num(parts[0])?, num(parts[1])?, lpips, num(parts[3])?))
}

fn leaderboard(args: LeaderboardArgs) -> CliResult {
    let mut rows = Vec::new();
    for spec in &args.reports {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) => (Some(n.to_string()), Path::new(p)),
            None => (None, Path::new(spec.as_str())),
        };
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let report = DatasetReport::from_json(&text)?;
        let name = name.unwrap_or_else(|| report.report.algorithm.clone());
        rows.push(LeaderboardRow::from_report(name, &report)?);
    }
    for spec in &args.rows {
        rows.push(parse_row(spec)?);
    }
    let mut runtimes = BTreeMap::new();
    for spec in &args.runtimes {
        let (name, secs) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected NAME=SECONDS, got `{spec}`")))?;
        let secs: f64 = secs
            .parse()
            .map_err(|_| CliError::Usage(format!("bad seconds in `{spec}`")))?;
        runtimes.insert(name.to_string(), secs);
    }
    for (name, secs) in &runtimes {
        let row = rows
            .iter_mut()
            .find(|r| &r.name == name)
            .ok_or_else(|| CliError::Usage(format!("--runtime names unknown row `{name}`")))?;
        row.runtime_s = Some(*secs);
        row.runtime_64m_s = Some(estimate_64m_runtime(*secs, MEASURED_WIDTH, MEASURED_HEIGHT)?);
    }
    let ranked = rank_leaderboard(&rows, args.mode)?;
    if args.json {
        println!("{}", render_leaderboard_json(&ranked, args.mode)?);
    } else {
        print!("{}", render_leaderboard_text(&ranked, args.mode));
    }
    Ok(())
}
