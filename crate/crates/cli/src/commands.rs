use serde_json::{json, Value};
use std::path::Path;

use cee_core::algebra::{factorize, product_residual, tensor_product, Factorization, NOISY_EPSILON};
use cee_core::grain::{coarse_grain, grain_search, CoarseGraining, GrainBudget};
use cee_core::sim::{
    empirical_tpm, half_ring_encoder, hologram_entropy, physicality, simulate, Regime, SimConfig, TrajectoryFile,
};
use cee_core::system::{cause_effect_structure, find_complexes, CauseEffectStructure, Complex, PhiConfig, SystemCut};
use cee_core::{NodeSubset, SystemState, Tpm};

use crate::report::{render, sha256_hex};
use crate::CliError;

/// A command's JSON result; `partial` marks budget-limited output.
pub struct Outcome {
    pub body: Value,
    pub partial: bool,
    /// Extra CSV output, if requested.
    pub csv: Option<String>,
}

impl Outcome {
    fn full(body: Value) -> Self {
        Outcome { body, partial: false, csv: None }
    }
}

pub struct Input {
    pub bytes: Vec<u8>,
    pub sha256: String,
}

pub fn read_input(path: &Path) -> Result<Input, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let sha256 = sha256_hex(&bytes);
    Ok(Input { bytes, sha256 })
}

fn text(input: &Input) -> Result<&str, CliError> {
    std::str::from_utf8(&input.bytes).map_err(|_| CliError::Input("input is not UTF-8".into()))
}

pub fn load_tpm(input: &Input) -> Result<Tpm, CliError> {
    Ok(Tpm::from_json(text(input)?)?)
}

pub fn load_sim_config(input: &Input) -> Result<SimConfig, CliError> {
    let config: SimConfig = serde_json::from_str(text(input)?)
        .map_err(|e| CliError::Input(format!("invalid-config: {e}")))?;
    config.validate()?;
    Ok(config)
}

fn elements(s: NodeSubset) -> Vec<usize> {
    s.elements().collect()
}

fn settings(cfg: &PhiConfig) -> Value {
    json!({
        "phi_metric": cfg.metric.name(),
        "phi_mode": cfg.mode.name(),
        "relations_order": cfg.relations_order,
    })
}

fn cut_json(cut: &SystemCut) -> Value {
    json!({ "from": elements(cut.from), "to": elements(cut.to) })
}

fn complex_json(c: &Complex) -> Value {
    let bits: String = (0..c.elements.len()).map(|k| if c.state >> k & 1 == 1 { '1' } else { '0' }).collect();
    json!({
        "elements": elements(c.elements),
        "big_phi": c.big_phi,
        "state": bits,
        "cut": cut_json(&c.cut),
    })
}

fn ces_json(ces: &CauseEffectStructure) -> Value {
    let side = |p: &cee_core::CorePurview| {
        json!({
            "purview": elements(p.purview),
            "phi": p.phi,
            "repertoire": p.repertoire.probs,
        })
    };
    json!({
        "elements": elements(ces.elements),
        "sum_phi": ces.sum_phi,
        "distinctions": ces.distinctions.iter().map(|d| json!({
            "mechanism": elements(d.mechanism),
            "phi": d.phi,
            "cause": side(&d.cause),
            "effect": side(&d.effect),
        })).collect::<Vec<_>>(),
        "reducible": ces.reducible.iter().map(|&m| elements(m)).collect::<Vec<_>>(),
        "relations": ces.relations.iter().map(|r| json!({
            "members": r.members,
            "faces": r.faces,
            "overlap": elements(r.overlap),
        })).collect::<Vec<_>>(),
    })
}

fn factorization_json(f: &Factorization) -> Value {
    json!({
        "groups": f.groups.iter().map(|&g| elements(g)).collect::<Vec<_>>(),
        "residual": f.residual,
    })
}

fn header(command: &str) -> Value {
    json!({ "tool": "cee", "version": env!("CARGO_PKG_VERSION"), "command": command })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn parse_state(tpm: &Tpm, state: &str) -> Result<SystemState, CliError> {
    Ok(SystemState::parse_bits(state, tpm.n())?)
}

fn complexes_section(tpm: &Tpm, state: SystemState, cfg: &PhiConfig, with_ces: bool) -> Result<Value, CliError> {
    let search = find_complexes(tpm, state, cfg)?;
    let mut v = json!({
        "evaluated": search.evaluated.iter().map(|e| json!({
            "subset": elements(e.subset),
            "big_phi": e.big_phi,
        })).collect::<Vec<_>>(),
        "complexes": search.complexes.iter().map(complex_json).collect::<Vec<_>>(),
        "exclusive": search.exclusive.iter().map(complex_json).collect::<Vec<_>>(),
    });
    if with_ces {
        let ces = search
            .exclusive
            .iter()
            .map(|c| cause_effect_structure(tpm, c.elements, state, cfg).map(|s| ces_json(&s)))
            .collect::<Result<Vec<_>, _>>()?;
        v["ces"] = Value::Array(ces);
    }
    Ok(v)
}

pub fn analyze(input: &Input, state: &str, cfg: &PhiConfig, with_ces: bool) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let tpm = load_tpm(input)?;
    let st = parse_state(&tpm, state)?;
    let body = merge(
        header(if with_ces { "analyze" } else { "complexes" }),
        json!({
            "inputs": { "tpm_sha256": input.sha256, "state": state },
            "settings": settings(cfg),
            "n": tpm.n(),
        }),
    );
    Ok(Outcome::full(merge(body, complexes_section(&tpm, st, cfg, with_ces)?)))
}

pub fn ces(input: &Input, state: &str, subset: &[usize], cfg: &PhiConfig) -> Result<Outcome, CliError> {
    let tpm = load_tpm(input)?;
    let st = parse_state(&tpm, state)?;
    if subset.iter().any(|&i| i >= tpm.n()) {
        return Err(CliError::Input(format!("mask-out-of-range: elements {subset:?} for n = {}", tpm.n())));
    }
    let elems = if subset.is_empty() { tpm.all_elements() } else { NodeSubset::from_elements(subset.iter().copied()) };
    let ces = cause_effect_structure(&tpm, elems, st, cfg)?;
    Ok(Outcome::full(merge(
        header("ces"),
        json!({
            "inputs": { "tpm_sha256": input.sha256, "state": state },
            "settings": settings(cfg),
            "ces": ces_json(&ces),
        }),
    )))
}

pub fn compose(a: &Input, b: &Input) -> Result<Outcome, CliError> {
    let t = tensor_product(&load_tpm(a)?, &load_tpm(b)?)?;
    let body = serde_json::to_value(t.to_file()).expect("tpm file serializes");
    Ok(Outcome::full(body))
}

pub fn factorize_cmd(input: &Input, epsilon: f64) -> Result<Outcome, CliError> {
    let tpm = load_tpm(input)?;
    let f = factorize(&tpm, epsilon)?;
    Ok(Outcome::full(merge(
        header("factorize"),
        json!({
            "inputs": { "tpm_sha256": input.sha256, "epsilon": epsilon },
            "factorization": factorization_json(&f),
        }),
    )))
}

pub fn grain(input: &Input, state: &str, budget: &GrainBudget, cfg: &PhiConfig, want_csv: bool) -> Result<Outcome, CliError> {
    let tpm = load_tpm(input)?;
    let st = parse_state(&tpm, state)?;
    let search = grain_search(&tpm, st, budget, cfg)?;
    let grain_json = |g: &CoarseGraining, phi: f64| -> Result<Value, CliError> {
        let macro_tpm = coarse_grain(&tpm, g, None)?;
        Ok(merge(
            serde_json::to_value(g).expect("grain serializes"),
            json!({ "big_phi": phi, "macro_state": g.macro_state(st.0), "macro_tpm": macro_tpm.rows() }),
        ))
    };
    let maximal = search
        .maximal
        .iter()
        .map(|r| grain_json(&r.grain, r.big_phi))
        .collect::<Result<Vec<_>, _>>()?;
    let csv = want_csv.then(|| {
        let mut s = String::from("index,grain,stride,big_phi\n");
        for r in &search.evaluated {
            let phi = crate::report::round_sig(r.big_phi).unwrap_or(f64::NAN);
            s.push_str(&format!("{},\"{}\",{},{}\n", r.index, r.grain.label(), r.grain.stride(), phi));
        }
        s
    });
    Ok(Outcome {
        body: merge(
            header("grain"),
            json!({
                "inputs": { "tpm_sha256": input.sha256, "state": state },
                "settings": settings(cfg),
                "budget": budget,
                "evaluated": search.evaluated.len(),
                "max_big_phi": search.maximal.first().map_or(0.0, |r| r.big_phi),
                "maximal": maximal,
                "partial": search.partial,
            }),
        ),
        partial: search.partial,
        csv,
    })
}

pub fn simulate_cmd(config: SimConfig) -> Result<Outcome, CliError> {
    let (ensemble, ledger) = simulate(&config)?;
    let file = TrajectoryFile::new(config, ensemble, ledger);
    Ok(Outcome::full(serde_json::to_value(file).expect("trajectory serializes")))
}

pub fn pipeline(
    input: &Input,
    config: SimConfig,
    epsilon: Option<f64>,
    smoothing: f64,
    cfg: &PhiConfig,
) -> Result<Outcome, CliError> {
    let epsilon = epsilon.unwrap_or(NOISY_EPSILON);
    let (ensemble, ledger) = simulate(&config)?;
    let tpm = empirical_tpm(&ensemble, config.num_particles, half_ring_encoder(&config), smoothing)?;
    let tpm_json = render(serde_json::to_value(tpm.to_file()).expect("tpm serializes"));
    let state_index = half_ring_encoder(&config)(&ensemble.configuration(ensemble.num_steps()))
        .ok_or(cee_core::Error::EncoderNotTotal { step: ensemble.num_steps() })?;
    let state = SystemState(state_index);
    let factorization = factorize(&tpm, epsilon)?;
    let singletons: Vec<NodeSubset> = (0..tpm.n()).map(NodeSubset::singleton).collect();
    let work = physicality(Regime::Euclidean, false, 1.0)?;
    let body = merge(
        header("pipeline"),
        json!({
            "inputs": { "config_sha256": input.sha256, "config": config, "epsilon": epsilon, "smoothing": smoothing },
            "settings": settings(cfg),
            "empirical_tpm": { "sha256": sha256_hex(tpm_json.as_bytes()), "tpm": tpm.rows() },
            "final_state": state.to_bit_string(tpm.n()),
            "factorization": factorization_json(&factorization),
            "particle_residual": product_residual(&tpm, &singletons)?,
            "ledger": {
                "s_e0": ledger.s_e0,
                "bits": ledger.bits,
                "events": ledger.events.len(),
                "entropy_area_bits": hologram_entropy(config.area_tn),
                "regime": Regime::Euclidean,
                "work": work.work,
                "physicality": work.physicality,
            },
        }),
    );
    Ok(Outcome::full(merge(body, complexes_section(&tpm, state, cfg, false)?)))
}

pub fn sweep(input: &Input, config: SimConfig, couplings: &[f64], seeds: u64) -> Result<Outcome, CliError> {
    use rayon::prelude::*;
    if seeds == 0 || couplings.is_empty() {
        return Err(CliError::Input("invalid-config: need at least one seed and one coupling".into()));
    }
    let jobs: Vec<(f64, u64)> = couplings.iter().flat_map(|&g| (0..seeds).map(move |s| (g, s))).collect();
    let residuals: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, s)| {
            let c = SimConfig { coupling: g, seed: config.seed.wrapping_add(s), ..config.clone() };
            let (ens, _) = simulate(&c)?;
            let t = empirical_tpm(&ens, c.num_particles, half_ring_encoder(&c), 1.0)?;
            let groups: Vec<NodeSubset> = (0..t.n()).map(NodeSubset::singleton).collect();
            product_residual(&t, &groups)
        })
        .collect::<Result<_, _>>()?;
    let mut csv = String::from("coupling,seed,residual\n");
    for ((g, s), r) in jobs.iter().zip(&residuals) {
        csv.push_str(&format!(
            "{},{},{}\n",
            g,
            config.seed.wrapping_add(*s),
            crate::report::round_sig(*r).unwrap_or(f64::NAN)
        ));
    }
    let medians: Vec<Value> = couplings
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            let mut rs: Vec<f64> = residuals[k * seeds as usize..(k + 1) * seeds as usize].to_vec();
            rs.sort_by(f64::total_cmp);
            let m = rs.len();
            let median = if m % 2 == 1 { rs[m / 2] } else { 0.5 * (rs[m / 2 - 1] + rs[m / 2]) };
            json!({ "coupling": g, "median_residual": median, "residuals": rs })
        })
        .collect();
    Ok(Outcome {
        body: merge(
            header("sweep"),
            json!({ "inputs": { "config_sha256": input.sha256, "config": config, "seeds": seeds }, "sweep": medians }),
        ),
        partial: false,
        csv: Some(csv),
    })
}
