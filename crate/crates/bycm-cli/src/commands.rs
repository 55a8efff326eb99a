use std::fmt;

use bycm::bigraph::{check_nearly_semi_regular, BipartiteGraph, SemiRegularParams};
use bycm::codec::{
    generate_codebooks, induced_degrees, run_monte_carlo, CodecConfig, GraphStats, Rates, SourceModel,
};
use bycm::duality::{byp_to_sbc, sbc_sum_capacity, verify_duality, DualityTolerances};
use bycm::prob::{Alphabet, CondPmf, JointPmf};
use bycm::region::{minimize_sum_rate, CornerPoints, DistortionMatrix, InfoMeasures, ReconMap, SolverParams};
use bycm::seed::derive_seed;
use bycm::typicality::{count_typical_set, measure_epsilon1_capped, TypicalityParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{num, write_csv, write_json, Meta, Table};
use crate::{
    Cli, CodecArgs, Command, DualityArgs, GraphcheckArgs, RegionArgs, SourceArgs, EXIT_CAPACITY, EXIT_CONFIG,
    EXIT_INFEASIBLE,
};

/// Enumeration cap for the ε₁ measurement behind the default ε′.
const EPSILON1_CAP: u64 = 1 << 40;
const GRAPH_STREAM: u64 = 6;

#[derive(Debug)]
pub enum CliError {
    Lib(bycm::Error),
    Config(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<bycm::Error> for CliError {
    fn from(e: bycm::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use bycm::Error as E;
        match self {
            CliError::Lib(E::Infeasible { .. } | E::Precondition { .. }) => EXIT_INFEASIBLE,
            CliError::Lib(E::Capacity { .. }) => EXIT_CAPACITY,
            CliError::Lib(E::Argument(_) | E::Config(_)) | CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Config(msg.into()))
}

pub fn run(cli: &Cli) -> Result<()> {
    if cli.grid == 0 {
        return config_err("--grid must be at least 1");
    }
    match &cli.command {
        Command::Region(a) => region(cli, a),
        Command::Simulate(a) => simulate(cli, &a.codec),
        Command::Graphcheck(a) => graphcheck(cli, a),
        Command::Duality(a) => duality(cli, a),
    }
}

fn load_source(a: &SourceArgs) -> Result<JointPmf> {
    let p = match (&a.dsbs, &a.source) {
        (Some(q), _) => JointPmf::dsbs(*q)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("--source {}: {e}", path.display())))?
        }
        (None, None) => return config_err("one of --dsbs or --source is required"),
    };
    if p.arity() != 2 {
        return config_err(format!("--source must have two axes, found {}", p.arity()));
    }
    Ok(p)
}

/// Semantic config: the parsed arguments with the source replaced by its PMF.
fn config_value<T: Serialize>(args: &T, source: Option<&JointPmf>, extra: Value) -> Value {
    let mut v = json!({ "args": args, "extra": extra });
    if let Some(p) = source {
        v["source"] = serde_json::to_value(p).expect("pmf serializes");
    }
    v
}

fn region(cli: &Cli, a: &RegionArgs) -> Result<()> {
    let source = load_source(&a.src)?;
    if a.d.is_empty() {
        return config_err("--d needs at least one value");
    }
    let dist = DistortionMatrix::hamming(source.axis(1).size());
    let params = SolverParams {
        grid: cli.grid,
        aux_size: a.aux_size,
        restrict_to_x1_classes: a.restricted,
        ..SolverParams::default()
    };
    let mut table = Table::new(vec![
        "d",
        "sum_rate",
        "achieved_d",
        "h_x1",
        "h_x1_given_v",
        "i_v_x2",
        "i_x1_v",
        "i_v_x2_given_x1",
        "r1",
        "r2",
        "r1p",
        "r2p",
    ]);
    for &d in &a.d {
        let sol = minimize_sum_rate(&source, &dist, d, &params)?;
        let m = &sol.measures;
        let pd = sol.corner_points.d;
        table.push(
            [d, sol.sum_rate, sol.achieved_d, m.h_x1, m.h_x1_given_v, m.i_v_x2, m.i_x1_v, m.i_v_x2_given_x1, pd.r1, pd.r2, pd.r1p, pd.r2p]
                .into_iter()
                .map(num)
                .collect(),
        );
    }
    let meta = Meta::new("region", config_value(a, Some(&source), json!({ "grid": cli.grid })), cli.seed);
    write_csv(cli.out.as_deref(), &meta, &table)
}

fn parse_aux(spec: &str, x2: &Alphabet) -> Result<CondPmf> {
    match spec {
        "identity" => Ok(CondPmf::identity(x2.clone())),
        "constant" => Ok(CondPmf::constant(x2.clone(), Alphabet::indexed(1))),
        _ => {
            let Some(p) = spec.strip_prefix("bsc:").and_then(|p| p.parse::<f64>().ok()) else {
                return config_err(format!("--aux: expected identity, constant or bsc:<p>, got {spec:?}"));
            };
            if x2.size() != 2 {
                return config_err("--aux bsc:<p> needs a binary X2");
            }
            Ok(CondPmf::from_fn(vec![x2.clone()], vec![x2.clone()], |i, j| if i[0] == j[0] { 1.0 - p } else { p })?)
        }
    }
}

/// Model, codec config and the measured ε₁ behind the ε′ actually used.
struct CodecSetup {
    model: SourceModel,
    cfg: CodecConfig,
    epsilon1: Option<f64>,
    source: JointPmf,
}

fn codec_setup(a: &CodecArgs, n: usize, seed: u64) -> Result<CodecSetup> {
    let source = load_source(&a.src)?;
    let aux = parse_aux(&a.aux, source.axis(1))?;
    let recon = ReconMap::from_v(source.axis(0).size(), aux.to_len());
    let model = SourceModel::new(source.clone(), aux, recon, DistortionMatrix::hamming(source.axis(1).size()))?;
    let m = InfoMeasures::of(&model.source, &model.aux)?;
    let corners = CornerPoints::from_measures(&m, model.expected_distortion(), None)?;
    let point = match a.point.to_ascii_uppercase().as_str() {
        "A" => corners.a,
        "B" => corners.b,
        "C" => corners.c,
        "D" => corners.d,
        other => return config_err(format!("--point must be A, B, C or D, got {other:?}")),
    };
    let raw = Rates::from_point(&point, a.margin);
    let rates = Rates {
        r1: raw.r1.max(0.0),
        r2: raw.r2.max(0.0),
        r1p: raw.r1p.max(0.0),
        r2p: raw.r2p.max(0.0),
    };
    let (eps_prime, epsilon1) = match a.eps_prime {
        Some(e) => (e, None),
        None => {
            let x1v = model.joint.marginal(&[0, 2])?;
            let params = TypicalityParams::new(a.eps, n)?;
            let e1 = measure_epsilon1_capped(&x1v, &params, EPSILON1_CAP)?;
            if !e1.is_finite() {
                return config_err("ε₁ is infinite (an (X1, V) typical set is empty); pass --eps-prime");
            }
            (3.0 * e1 + 0.05, Some(e1))
        }
    };
    let mut cfg = CodecConfig::new(n, a.eps, eps_prime, rates, seed);
    cfg.markov_k = a.k;
    cfg.validate()?;
    Ok(CodecSetup {
        model,
        cfg,
        epsilon1,
        source,
    })
}

#[derive(Serialize)]
struct SimulateResult {
    config: CodecConfig,
    epsilon1: Option<f64>,
    summary: bycm::codec::MonteCarloSummary,
}

fn simulate(cli: &Cli, a: &CodecArgs) -> Result<()> {
    if cli.trials == 0 {
        return config_err("--trials must be at least 1");
    }
    if a.n.is_empty() {
        return config_err("--n needs at least one block length");
    }
    let mut source = None;
    let mut runs = Vec::with_capacity(a.n.len());
    for &n in &a.n {
        let setup = codec_setup(a, n, cli.seed)?;
        let summary = run_monte_carlo(&setup.model, &setup.cfg, cli.trials)?;
        source = Some(setup.source);
        runs.push(SimulateResult {
            config: setup.cfg,
            epsilon1: setup.epsilon1,
            summary,
        });
    }
    let meta = Meta::new(
        "simulate",
        config_value(a, source.as_ref(), json!({ "trials": cli.trials })),
        cli.seed,
    );
    write_json(cli.out.as_deref(), &meta, &json!({ "runs": runs }))?;
    // One row per block length next to the report; stdout carries only JSON.
    if let Some(prefix) = cli.out.as_deref() {
        let mut table = Table::new(vec![
            "n",
            "trials",
            "e1",
            "e2",
            "e3",
            "e4",
            "e5",
            "e6",
            "e7",
            "decode_error_rate",
            "tau_x1",
            "tau_x2",
            "graph_edges",
            "min_degree1",
            "max_degree1",
            "min_degree2",
            "max_degree2",
        ]);
        for r in &runs {
            let s = &r.summary;
            let g = |f: fn(&bycm::codec::GraphStats) -> usize| s.graph.as_ref().map_or(String::new(), |g| f(g).to_string());
            let mut row = vec![s.n.to_string(), s.trials.to_string()];
            row.extend([s.e1, s.e2, s.e3, s.e4, s.e5, s.e6, s.e7, s.decode_error_rate, s.tau_x1, s.tau_x2].map(num));
            row.extend([
                g(|g| g.edges),
                g(|g| g.min_degree1),
                g(|g| g.max_degree1),
                g(|g| g.min_degree2),
                g(|g| g.max_degree2),
            ]);
            table.push(row);
        }
        write_csv(Some(prefix), &meta, &table)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct GraphcheckResult {
    verdict: String,
    summary: bycm::bigraph::GraphSummary,
    params: SemiRegularParams,
    report: bycm::bigraph::SemiRegularReport,
}

fn graphcheck(cli: &Cli, a: &GraphcheckArgs) -> Result<()> {
    if a.induced {
        return graphcheck_induced(cli, a);
    }
    let path = a.edges.as_ref().expect("clap requires --edges");
    let (Some(n1), Some(n2)) = (a.n1, a.n2) else {
        return config_err("--n1 and --n2 are required with --edges");
    };
    let Some(p) = a.params.as_deref().filter(|p| p.len() == 5) else {
        return config_err("--params needs five values Δ1,Δ2,Δ1′,Δ2′,μ with --edges");
    };
    let params = SemiRegularParams::new(p[0], p[1], p[2], p[3], p[4])?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let g = BipartiteGraph::from_csv(n1, n2, &text)?;
    let report = check_nearly_semi_regular(&g, &params);
    let verdict = format!("nearly semi-regular: {}", report.passed);
    eprintln!("{verdict}");
    let meta = Meta::new(
        "graphcheck",
        config_value(&(n1, n2, p), None, json!({ "edges": g.edges() })),
        cli.seed,
    );
    let result = GraphcheckResult {
        verdict,
        summary: g.summary(),
        params,
        report,
    };
    write_json(cli.out.as_deref(), &meta, &result)
}

fn graphcheck_induced(cli: &Cli, a: &GraphcheckArgs) -> Result<()> {
    if cli.trials == 0 {
        return config_err("--trials must be at least 1");
    }
    let n = match a.codec.n[..] {
        [n] => n,
        _ => return config_err("--n takes a single block length with --induced"),
    };
    let setup = codec_setup(&a.codec, n, cli.seed)?;
    let params = TypicalityParams::new(setup.cfg.eps, setup.cfg.n)?;
    let typical_x1 = count_typical_set(&setup.model.joint.marginal(&[0])?, &params, EPSILON1_CAP)?;
    let typical_v = count_typical_set(&setup.model.joint.marginal(&[2])?, &params, EPSILON1_CAP)?;
    let mut table = Table::new(vec![
        "index",
        "codebook_seed",
        "n",
        "eps",
        "eps_prime",
        "typical_x1",
        "typical_v",
        "codebook1",
        "codebook2",
        "bins1",
        "bins2",
        "edges",
        "min_degree1",
        "max_degree1",
        "min_degree2",
        "max_degree2",
        "e1",
        "e2",
        "semi_regular",
    ]);
    let mut semi = 0;
    for index in 0..cli.trials {
        let cfg = CodecConfig {
            seed: derive_seed(cli.seed, GRAPH_STREAM, index as u64),
            ..setup.cfg
        };
        let cb = generate_codebooks(&setup.model, &cfg)?;
        let (d1, d2) = induced_degrees(&cb, &cfg)?;
        let (s, _) = GraphStats::from_degrees(&d1, &d2, &cb, &cfg)?;
        semi += s.semi_regular as usize;
        table.push(vec![
            index.to_string(),
            cfg.seed.to_string(),
            cfg.n.to_string(),
            num(cfg.eps),
            num(cfg.eps_prime),
            typical_x1.to_string(),
            typical_v.to_string(),
            cb.c1.len().to_string(),
            cb.c2.len().to_string(),
            cb.c1.n_bins().to_string(),
            cb.c2.n_bins().to_string(),
            s.edges.to_string(),
            s.min_degree1.to_string(),
            s.max_degree1.to_string(),
            s.min_degree2.to_string(),
            s.max_degree2.to_string(),
            s.e1.to_string(),
            s.e2.to_string(),
            s.semi_regular.to_string(),
        ]);
    }
    eprintln!("nearly semi-regular: {semi} of {}", cli.trials);
    let meta = Meta::new(
        "graphcheck",
        config_value(&a.codec, Some(&setup.source), json!({ "induced": true, "trials": cli.trials })),
        cli.seed,
    );
    write_csv(cli.out.as_deref(), &meta, &table)
}

fn duality(cli: &Cli, a: &DualityArgs) -> Result<()> {
    let source = load_source(&a.src)?;
    let params = SolverParams {
        grid: cli.grid,
        restrict_to_x1_classes: true,
        ..SolverParams::default()
    };
    let sol = minimize_sum_rate(&source, &DistortionMatrix::hamming(source.axis(1).size()), a.d, &params)?;
    let (ch, cost) = byp_to_sbc(&source, &sol, a.c1, a.theta)?;
    let sbc = sbc_sum_capacity(&ch, &cost, cli.grid)?;
    let tol = DualityTolerances {
        n: a.n,
        eps_prime: a.eps_prime,
        ..DualityTolerances::default()
    };
    let report = verify_duality(&source, &sol, &ch, &cost, &sbc, &tol)?;
    let meta = Meta::new("duality", config_value(a, Some(&source), json!({ "grid": cli.grid })), cli.seed);
    let result = json!({
        "report": report,
        "channel": ch,
        "cost": cost,
        "sbc": sbc,
    });
    write_json(cli.out.as_deref(), &meta, &result)?;
    // The per-input optimum goes next to the report; stdout carries only JSON.
    if let Some(prefix) = cli.out.as_deref() {
        let mut table = Table::new(vec!["x", "x1", "v", "p_x", "cost"]);
        for x in 0..ch.input().size() {
            table.push(vec![
                x.to_string(),
                ch.f(x).to_string(),
                sbc.classes[x].to_string(),
                num(sbc.p_x[x]),
                num(cost.w[x]),
            ]);
        }
        write_csv(Some(prefix), &meta, &table)?;
    }
    Ok(())
}
