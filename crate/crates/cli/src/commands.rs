use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context};

use taxagg::aggregate::{aggregate_many, GraphicalModel, Method};
use taxagg::decision::{EntropyForm, TerminationPolicy};
use taxagg::estimation::{default_init, em_fit, fit_supervised, EmConfig, FitKind, LabeledSheet};
use taxagg::eval::evaluate as eval_report;
use taxagg::graphical::{JunctionTreeConfig, LeakRule, NetworkConfig, ObservationKind, SIGMA_FLOOR};
use taxagg::io::{self, fmt_num};
use taxagg::synth::{self, GenConfig};
use taxagg::{ClassId, ScoreSheet, Taxonomy};

use crate::settings::Settings;
use crate::{AggregateArgs, Classify, EmArgs, EvaluateArgs, Exit, FitArgs, ModelArgs, Outcome, SimulateArgs, ValidateArgs};

fn read(path: &str) -> Outcome<String> {
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {path}"))
        .or_exit(Exit::Io)
}

fn parsed<T, E>(path: &str, r: Result<T, E>) -> Outcome<T>
where
    E: std::error::Error + Send + Sync + 'static,
{
    r.with_context(|| format!("in {path}")).or_exit(Exit::Input)
}

fn load_taxonomy(path: &str) -> Outcome<Taxonomy> {
    parsed(path, io::parse_taxonomy(&read(path)?))
}

fn load_sheets(path: &str, t: &Taxonomy) -> Outcome<Vec<ScoreSheet>> {
    parsed(path, io::parse_sheets(&read(path)?, Some(t)))
}

fn header(command: &str, settings: &Settings, extra: &[(&str, String)]) -> String {
    let mut h = format!("# taxagg {}\n# command: {command}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in extra {
        writeln!(h, "# {k}: {v}").unwrap();
    }
    writeln!(h, "# config-sha256: {}", settings.digest()).unwrap();
    h
}

/// Writes `body` under the metadata header to `path`, or stdout if `None`.
fn emit(path: Option<&str>, header: &str, body: &str) -> Outcome<()> {
    let text = format!("{header}{body}");
    match path {
        Some(p) => std::fs::write(p, text)
            .with_context(|| format!("writing {p}"))
            .or_exit(Exit::Io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn usage(msg: String) -> crate::Failure {
    crate::Failure { exit: Exit::Usage, error: anyhow!(msg) }
}

pub fn validate_taxonomy(s: &mut Settings, a: ValidateArgs) -> Outcome<()> {
    let path = s.require::<String>("taxonomy", a.taxonomy).or_exit(Exit::Usage)?;
    let output = s.get::<String>("output", a.output).or_exit(Exit::Usage)?;
    let t = load_taxonomy(&path)?;
    let mut body = String::new();
    writeln!(body, "classes\t{}", t.len()).unwrap();
    writeln!(body, "edges\t{}", t.edge_count()).unwrap();
    writeln!(body, "roots\t{}", join(t.roots().iter())).unwrap();
    writeln!(body, "leaves\t{}", t.leaves().len()).unwrap();
    writeln!(body, "max_depth\t{}", t.max_depth()).unwrap();
    let multi: Vec<&ClassId> = (0..t.len())
        .filter(|&i| t.parents_of(i).len() > 1)
        .map(|i| t.name(i))
        .collect();
    writeln!(body, "multi_parent\t{}", join(multi.into_iter())).unwrap();
    writeln!(body, "isolated\t{}", join(t.isolated().into_iter())).unwrap();
    emit(output.as_deref(), &header("validate-taxonomy", s, &[]), &body)
}

fn join<T: std::fmt::Display>(it: impl Iterator<Item = T>) -> String {
    let v: Vec<String> = it.map(|x| x.to_string()).collect();
    if v.is_empty() {
        "-".into()
    } else {
        v.join(",")
    }
}

fn model_configs(s: &mut Settings, m: ModelArgs) -> Outcome<(NetworkConfig, JunctionTreeConfig, f64)> {
    let floor = s.or("sigma-floor", m.sigma_floor, SIGMA_FLOOR).or_exit(Exit::Usage)?;
    if floor.is_nan() || floor <= 0.0 {
        return Err(usage(format!("sigma-floor must be positive, got {floor}")));
    }
    let defaults = JunctionTreeConfig::default();
    let jt = JunctionTreeConfig {
        max_width: s.or("max-width", m.max_width, defaults.max_width).or_exit(Exit::Usage)?,
        max_dense_parents: s
            .or("max-dense-parents", m.max_dense_parents, defaults.max_dense_parents)
            .or_exit(Exit::Usage)?,
    };
    let leak = s.get::<f64>("leak", m.leak).or_exit(Exit::Usage)?;
    let prior = s.get::<f64>("prior", m.prior).or_exit(Exit::Usage)?;
    let weights = s.get::<String>("leaf-weights", m.leaf_weights).or_exit(Exit::Usage)?;
    let leak_rule = match (leak, prior) {
        (Some(leak), prior) => {
            if weights.is_some() {
                return Err(usage("leaf-weights only applies to the structural leak rule".into()));
            }
            LeakRule::Fixed { leak, prior: prior.unwrap_or(0.5) }
        }
        (None, Some(_)) => return Err(usage("prior needs leak".into())),
        (None, None) => LeakRule::Structural {
            weights: match weights {
                Some(p) => parsed(&p, io::parse_weights(&read(&p)?))?,
                None => BTreeMap::new(),
            },
        },
    };
    let net = NetworkConfig {
        leak_rule,
        sigma_floor: floor,
        max_dense_parents: jt.max_dense_parents,
        ..NetworkConfig::default()
    };
    Ok((net, jt, floor))
}

pub fn aggregate(s: &mut Settings, a: AggregateArgs) -> Outcome<()> {
    let tpath = s.require::<String>("taxonomy", a.taxonomy).or_exit(Exit::Usage)?;
    let spath = s.require::<String>("sheets", a.sheets).or_exit(Exit::Usage)?;
    let method = s.or("method", a.method, "heuristic".to_string()).or_exit(Exit::Usage)?;
    let default_policy = if method == "graphical" { "marginal" } else { "entropy" };
    let policy_name = s.or("policy", a.policy, default_policy.to_string()).or_exit(Exit::Usage)?;
    let mut policy = match policy_name.as_str() {
        "entropy" => {
            let theta = s.or("theta", a.theta, 0.5).or_exit(Exit::Usage)?;
            let form_name = s.or("entropy-form", a.entropy_form, "raw".to_string()).or_exit(Exit::Usage)?;
            let form = EntropyForm::parse(&form_name)
                .ok_or_else(|| usage(format!("entropy-form must be `raw` or `distribution`, got `{form_name}`")))?;
            TerminationPolicy::Entropy { theta, form }
        }
        "marginal" => TerminationPolicy::Marginal { tau: s.or("tau", a.tau, 0.5).or_exit(Exit::Usage)? },
        other => return Err(usage(format!("policy must be `entropy` or `marginal`, got `{other}`"))),
    };
    let cap = s.or("root-path-cap", a.root_path_cap, 64usize).or_exit(Exit::Usage)?;
    let entry = s.get::<String>("entry-level", a.entry_level).or_exit(Exit::Usage)?;
    let params_path = s.get::<String>("params", a.params).or_exit(Exit::Usage)?;
    let output = s.get::<String>("output", a.output).or_exit(Exit::Usage)?;
    let scores_output = s.get::<String>("scores-output", a.scores_output).or_exit(Exit::Usage)?;

    let t = load_taxonomy(&tpath)?;
    if let Some(p) = &entry {
        let entry_set = parsed(p, io::parse_class_set(&read(p)?))?;
        policy = TerminationPolicy::EntryLevel { base: Box::new(policy), entry_set };
    }
    policy.validate(&t).or_exit(Exit::Usage)?;
    let sheets = load_sheets(&spath, &t)?;

    let method = match method.as_str() {
        "heuristic" => {
            let (_, _, _) = model_configs(s, a.model)?;
            Method::Heuristic
        }
        "graphical" => {
            let p = params_path.ok_or_else(|| usage("graphical aggregation needs `--params`".into()))?;
            let params = parsed(&p, io::parse_params(&read(&p)?))?;
            let (net, jt, _) = model_configs(s, a.model)?;
            Method::Graphical(Box::new(GraphicalModel::new(&t, &params, &net, &jt).or_exit(Exit::Model)?))
        }
        other => return Err(usage(format!("method must be `heuristic` or `graphical`, got `{other}`"))),
    };

    let records = aggregate_many(&t, &method, &policy, &sheets).or_exit(Exit::Model)?;
    let mut body = String::from("instance_id\tmethod\tterminal\tpath\tpath_scores\troot_paths\tlog_evidence\tflags\n");
    let mut scores = String::from("instance_id\tclass\tvalue\n");
    for r in &records {
        let path_scores: Vec<String> = r.path.nodes().iter().map(|c| fmt_num(r.node_values[c])).collect();
        let alternatives = t
            .root_paths(r.path.terminal().as_str(), cap)
            .map(|ps| join(ps.iter()).replace(',', "|"))
            .unwrap_or_else(|_| format!("more-than-{cap}"));
        writeln!(
            body,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.instance_id,
            r.method,
            r.path.terminal(),
            r.path,
            path_scores.join(","),
            alternatives,
            r.log_evidence.map_or("-".into(), fmt_num),
            if r.flagged { "no_entry_level_class" } else { "-" },
        )
        .unwrap();
        for (c, v) in &r.node_values {
            writeln!(scores, "{}\t{c}\t{}", r.instance_id, fmt_num(*v)).unwrap();
        }
    }
    let h = header("aggregate", s, &[]);
    emit(output.as_deref(), &h, &body)?;
    if let Some(p) = scores_output {
        emit(Some(&p), &h, &scores)?;
    }
    Ok(())
}

fn labeled(sheets: Vec<ScoreSheet>, gold: &BTreeMap<String, Vec<ClassId>>) -> Outcome<Vec<LabeledSheet>> {
    let unused = gold.keys().filter(|k| !sheets.iter().any(|s| &s.instance_id == *k)).count();
    if unused > 0 {
        log::warn!("{unused} gold-labeled instances have no scores");
    }
    sheets
        .into_iter()
        .map(|sheet| {
            let g = gold
                .get(&sheet.instance_id)
                .ok_or_else(|| anyhow!("instance `{}` has no gold label", sheet.instance_id))
                .or_exit(Exit::Input)?;
            Ok(LabeledSheet { gold: g.clone(), sheet })
        })
        .collect()
}

pub fn fit(s: &mut Settings, a: FitArgs) -> Outcome<()> {
    let tpath = s.require::<String>("taxonomy", a.taxonomy).or_exit(Exit::Usage)?;
    let spath = s.require::<String>("sheets", a.sheets).or_exit(Exit::Usage)?;
    let gpath = s.require::<String>("gold", a.gold).or_exit(Exit::Usage)?;
    let kind = s.or("kind", a.kind, "binormal".to_string()).or_exit(Exit::Usage)?;
    let kind = match kind.as_str() {
        "binormal" => FitKind::Binormal,
        "discrete" => FitKind::Discrete { smoothing: s.or("smoothing", a.smoothing, 1.0).or_exit(Exit::Usage)? },
        other => return Err(usage(format!("kind must be `binormal` or `discrete`, got `{other}`"))),
    };
    let floor = s.or("sigma-floor", a.sigma_floor, SIGMA_FLOOR).or_exit(Exit::Usage)?;
    let output = s.get::<String>("output", a.output).or_exit(Exit::Usage)?;

    let t = load_taxonomy(&tpath)?;
    let sheets = load_sheets(&spath, &t)?;
    let gold = parsed(&gpath, io::parse_gold(&read(&gpath)?, Some(&t)))?;
    let records = labeled(sheets, &gold)?;
    let (params, fallback) = fit_supervised(&t, &records, kind, floor).or_exit(Exit::Model)?;
    let mut h = header("fit", s, &[]);
    for (j, c) in &fallback {
        writeln!(h, "# fallback: {j}\t{c}").unwrap();
    }
    emit(output.as_deref(), &h, &io::write_params(&params))
}

pub fn em(s: &mut Settings, a: EmArgs) -> Outcome<()> {
    let tpath = s.require::<String>("taxonomy", a.taxonomy).or_exit(Exit::Usage)?;
    let spath = s.require::<String>("sheets", a.sheets).or_exit(Exit::Usage)?;
    let init_path = s.get::<String>("init", a.init).or_exit(Exit::Usage)?;
    let gold_path = s.get::<String>("gold", a.gold).or_exit(Exit::Usage)?;
    let max_iters = s.or("max-iters", a.max_iters, 100usize).or_exit(Exit::Usage)?;
    let tol = s.or("tol", a.tol, 1e-6).or_exit(Exit::Usage)?;
    let output = s.get::<String>("output", a.output).or_exit(Exit::Usage)?;
    let trace_output = s.get::<String>("trace-output", a.trace_output).or_exit(Exit::Usage)?;
    let soft_output = s.get::<String>("soft-labels-output", a.soft_labels_output).or_exit(Exit::Usage)?;
    let (network, junction_tree, sigma_floor) = model_configs(s, a.model)?;

    let t = load_taxonomy(&tpath)?;
    let sheets = load_sheets(&spath, &t)?;
    let init = match (init_path, gold_path) {
        (Some(p), _) => parsed(&p, io::parse_params(&read(&p)?))?,
        (None, Some(g)) => {
            let gold = parsed(&g, io::parse_gold(&read(&g)?, Some(&t)))?;
            let records = labeled(sheets.clone(), &gold)?;
            fit_supervised(&t, &records, FitKind::Binormal, sigma_floor).or_exit(Exit::Model)?.0
        }
        (None, None) => default_init(&sheets),
    };
    let cfg = EmConfig { max_iters, tol, sigma_floor, network, junction_tree };
    let out = em_fit(&t, &sheets, &init, &cfg).or_exit(Exit::Model)?;
    log::info!("em: {} log-likelihood evaluations, converged: {}", out.trace.len(), out.converged);

    let h = header("em", s, &[("converged", out.converged.to_string())]);
    emit(output.as_deref(), &h, &io::write_params(&out.params))?;
    if let Some(p) = trace_output {
        let mut body = String::from("iteration\tlog_likelihood\n");
        for (i, ll) in out.trace.iter().enumerate() {
            writeln!(body, "{i}\t{}", fmt_num(*ll)).unwrap();
        }
        emit(Some(&p), &h, &body)?;
    }
    if let Some(p) = soft_output {
        let mut body = String::from("instance_id\tclass\tq\n");
        for (inst, q) in out.soft_labels.instances.iter().zip(&out.soft_labels.q) {
            for (c, v) in out.soft_labels.classes.iter().zip(q) {
                writeln!(body, "{inst}\t{c}\t{}", fmt_num(*v)).unwrap();
            }
        }
        emit(Some(&p), &h, &body)?;
    }
    Ok(())
}

pub fn evaluate(s: &mut Settings, a: EvaluateArgs) -> Outcome<()> {
    let tpath = s.require::<String>("taxonomy", a.taxonomy).or_exit(Exit::Usage)?;
    let ppath = s.require::<String>("predictions", a.predictions).or_exit(Exit::Usage)?;
    let gpath = s.require::<String>("gold", a.gold).or_exit(Exit::Usage)?;
    let output = s.get::<String>("output", a.output).or_exit(Exit::Usage)?;
    let t = load_taxonomy(&tpath)?;
    let preds = parsed(&ppath, io::parse_predictions(&read(&ppath)?))?;
    let gold = parsed(&gpath, io::parse_gold(&read(&gpath)?, Some(&t)))?;
    let report = eval_report(&t, &preds, &gold).or_exit(Exit::Input)?;
    emit(output.as_deref(), &header("evaluate", s, &[]), &io::write_eval_report(&report))
}

pub fn simulate(s: &mut Settings, a: SimulateArgs) -> Outcome<()> {
    let d = GenConfig::default();
    let ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 } = d.params else {
        unreachable!("default generating params are binormal")
    };
    let cfg = GenConfig {
        seed: s.or("seed", a.seed, d.seed).or_exit(Exit::Usage)?,
        depth: s.or("depth", a.depth, d.depth).or_exit(Exit::Usage)?,
        branching: (
            s.or("branching-min", a.branching_min, d.branching.0).or_exit(Exit::Usage)?,
            s.or("branching-max", a.branching_max, d.branching.1).or_exit(Exit::Usage)?,
        ),
        dag_prob: s.or("dag-prob", a.dag_prob, d.dag_prob).or_exit(Exit::Usage)?,
        classifiers: s.or("classifiers", a.classifiers, d.classifiers).or_exit(Exit::Usage)?,
        classes_per_classifier: (
            s.or("classes-min", a.classes_min, d.classes_per_classifier.0).or_exit(Exit::Usage)?,
            s.or("classes-max", a.classes_max, d.classes_per_classifier.1).or_exit(Exit::Usage)?,
        ),
        params: ObservationKind::Binormal {
            mu0: s.or("mu0", a.mu0, mu0).or_exit(Exit::Usage)?,
            sigma0: s.or("sigma0", a.sigma0, sigma0).or_exit(Exit::Usage)?,
            mu1: s.or("mu1", a.mu1, mu1).or_exit(Exit::Usage)?,
            sigma1: s.or("sigma1", a.sigma1, sigma1).or_exit(Exit::Usage)?,
        },
        jitter: s.or("jitter", a.jitter, d.jitter).or_exit(Exit::Usage)?,
        instances: s.or("instances", a.instances, d.instances).or_exit(Exit::Usage)?,
    };
    let dir = s.require::<String>("out-dir", a.out_dir).or_exit(Exit::Usage)?;
    cfg.validate().map_err(usage)?;

    let data = synth::generate(&cfg);
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating {dir}"))
        .or_exit(Exit::Io)?;
    let h = header(
        "simulate",
        s,
        &[("seed", cfg.seed.to_string()), ("rng", synth::RNG_NAME.to_string())],
    );
    let gold: BTreeMap<String, Vec<ClassId>> = data
        .instances
        .golds
        .iter()
        .map(|(i, g)| (i.clone(), vec![g.clone()]))
        .collect();
    let dir = Path::new(&dir);
    let out = |name: &str| dir.join(name).to_string_lossy().into_owned();
    emit(Some(&out("taxonomy.tsv")), &h, &io::write_taxonomy(&data.taxonomy))?;
    emit(Some(&out("sheets.tsv")), &h, &io::write_sheets(&data.instances.sheets))?;
    emit(Some(&out("gold.tsv")), &h, &io::write_gold(&gold))?;
    emit(Some(&out("params.tsv")), &h, &io::write_params(&data.ensemble.truth))
}
