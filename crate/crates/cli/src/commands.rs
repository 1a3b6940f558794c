use prodset::dynamics::{end_to_end_extract, graded_ball, ExtractConfig};
use prodset::folner::{
    box_folner, density_along, folner_defect, index_shift, nilpotent_square_folner,
    sac_certificate, sampled_inclusion, thin_folner, FolnerFamily, IntervalConvention, PhiMap, QSchedule,
    Side, SideSchedule, ThinConfig,
};
use prodset::sets::SetSpec;
use prodset::sumsets::{
    search_witness, validate_parity_filter, verify_conjugated_slice, verify_full_scale_slice,
    verify_odd_scale_slice, verify_witness, BSource, Order, ProductForm, SearchConfig, ShiftSide,
    SliceConfig, Strategy, Witness,
};
use prodset::{Error, GroupDescriptor, GroupElement, Int, Rational};
use serde_json::{json, Value};

use crate::args::*;

/// Exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;
pub const EXIT_VIOLATION: i32 = 5;
pub const EXIT_NOT_FOUND: i32 = 6;

/// A command failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    /// Partial results worth reporting.
    pub result: Option<Value>,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            kind: "invalid-config",
            message: message.into(),
            result: None,
        }
    }

    fn verification(message: impl Into<String>, result: Value) -> Self {
        Failure {
            code: EXIT_VERIFICATION,
            kind: "verification-failure",
            message: message.into(),
            result: Some(result),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::InvalidInput(_)
            | Error::Group(_)
            | Error::EmptySchedule
            | Error::DuplicateElement(_)
            | Error::ScheduleNotDivergent(_) => (EXIT_INVALID, "invalid-config"),
            Error::BudgetExceeded { .. } => (EXIT_BUDGET, "budget-exceeded"),
            Error::InclusionViolation { .. }
            | Error::RatioBelowEta { .. }
            | Error::FiberExceeded { .. }
            | Error::CosetOverlap { .. } => (EXIT_VERIFICATION, "verification-failure"),
            Error::CounterexampleViolation(_) => (EXIT_VIOLATION, "counterexample-violation"),
            Error::NoWitness(_) => (EXIT_NOT_FOUND, "not-found"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
            result: None,
        }
    }
}

type Outcome = Result<Value, Failure>;

fn req<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T, Failure> {
    v.as_ref().ok_or_else(|| Failure::invalid(format!("missing value for `{field}`")))
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn group(spec: &Option<String>) -> Result<GroupDescriptor, Failure> {
    let s = req(spec, "group")?;
    let kind = s
        .parse()
        .map_err(|e| Failure::invalid(format!("invalid value for `group`: {e}")))?;
    GroupDescriptor::new(kind).map_err(|e| Failure::invalid(format!("invalid value for `group`: {e}")))
}

fn indices(field: &str, v: &Option<String>) -> Result<Vec<u32>, Failure> {
    let list = parse_u32_list(field, req(v, field)?).map_err(Failure::invalid)?;
    if list.contains(&0) {
        return Err(Failure::invalid(format!("invalid value for `{field}`: indices start at 1")));
    }
    Ok(list)
}

fn range(field: &str, v: &Option<String>) -> Result<std::ops::RangeInclusive<u32>, Failure> {
    let list = indices(field, v)?;
    let (lo, hi) = match (list.iter().min(), list.iter().max()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Failure::invalid(format!("invalid value for `{field}`: empty"))),
    };
    if (hi - lo + 1) as usize != list.len() {
        return Err(Failure::invalid(format!("invalid value for `{field}`: must be a contiguous range")));
    }
    Ok(lo..=hi)
}

fn convention(v: &Option<String>) -> Result<IntervalConvention, Failure> {
    match req(v, "convention")?.as_str() {
        "one-to" => Ok(IntervalConvention::OneTo),
        "centered" => Ok(IntervalConvention::CenteredHalfOpen),
        other => Err(Failure::invalid(format!(
            "invalid value for `convention`: `{other}`; expected one-to or centered"
        ))),
    }
}

fn family(g: &GroupDescriptor, name: &Option<String>, factor: &Option<u64>, conv: &Option<String>) -> Result<FolnerFamily, Failure> {
    match req(name, "family")?.as_str() {
        "box" => Ok(box_folner(
            g,
            SideSchedule::Linear {
                factor: *req(factor, "factor")?,
            },
            convention(conv)?,
        )?),
        "nilpotent" => Ok(nilpotent_square_folner(g)?),
        other => Err(Failure::invalid(format!(
            "invalid value for `family`: `{other}`; expected box or nilpotent"
        ))),
    }
}

fn set_family(g: &GroupDescriptor, spec: &Option<SetSpec>) -> Result<prodset::SetFamily, Failure> {
    Ok(req(spec, "set")?.build(g)?)
}

fn parse_elements(g: &GroupDescriptor, field: &str, s: &str) -> Result<Vec<GroupElement>, Failure> {
    let rows: Vec<Vec<Int>> =
        serde_json::from_str(s).map_err(|e| Failure::invalid(format!("invalid value for `{field}`: {e}")))?;
    rows.into_iter()
        .map(|r| g.element(r).map_err(|e| Failure::invalid(format!("invalid value for `{field}`: {e}"))))
        .collect()
}

fn parse_rational(field: &str, s: &str) -> Result<Rational, Failure> {
    let bad = || Failure::invalid(format!("invalid value for `{field}`: `{s}`"));
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n: Int = n.trim().parse().map_err(|_| bad())?;
    let d: Int = d.trim().parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

pub fn folner_gen(p: &FolnerGenArgs) -> Outcome {
    let g = group(&p.group)?;
    let f = family(&g, &p.family, &p.factor, &p.convention)?;
    let budget = *req(&p.budget, "budget")?;
    let list = *req(&p.elements, "elements")?;
    let mut sets = Vec::new();
    for n in indices("n", &p.n)? {
        let set = f.set(n)?;
        let mut row = json!({ "n": n, "size": to_json(&set.len()) });
        if list {
            row["elements"] = to_json(&set.elements(budget)?);
        }
        sets.push(row);
    }
    Ok(json!({
        "family": f.label(),
        "nilpotent_params": f.nilpotent_params().map(to_json),
        "sets": sets,
    }))
}

pub fn folner_check(p: &FolnerCheckArgs) -> Outcome {
    let g = group(&p.group)?;
    let f = family(&g, &p.family, &p.factor, &p.convention)?.with_budget(*req(&p.budget, "budget")?);
    let side = match req(&p.side, "side")?.as_str() {
        "left" => Side::Left,
        "right" => Side::Right,
        other => return Err(Failure::invalid(format!("invalid value for `side`: `{other}`"))),
    };
    let gens = match &p.generators {
        Some(s) => parse_elements(&g, "generators", s)?,
        None => (0..g.dim()).map(|i| g.basis(i)).collect(),
    };
    let mut rows = Vec::new();
    for n in indices("n", &p.n)? {
        let d = folner_defect(&f, n, &gens, side)?;
        let max = d.iter().max().cloned();
        rows.push(json!({ "n": n, "defects": to_json(&d), "max": max.map(|m| to_json(&m)) }));
    }
    Ok(json!({ "family": f.label(), "generators": to_json(&gens), "rows": rows }))
}

pub fn sac_cert(p: &SacCertArgs) -> Outcome {
    let g = group(&p.group)?;
    let psi = nilpotent_square_folner(&g)?.with_budget(*req(&p.budget, "budget")?);
    let phi = index_shift(&psi, 1);
    let map = match req(&p.map, "map")?.as_str() {
        "square" => PhiMap::Square,
        "identity" => PhiMap::Identity,
        other => return Err(Failure::invalid(format!("invalid value for `map`: `{other}`"))),
    };
    let eta = match &p.eta {
        Some(s) => parse_rational("eta", s)?,
        None => psi.nilpotent_params().expect("nilpotent family").eta.clone(),
    };
    let cert = sac_certificate(&phi, &psi, &map, range("n", &p.n)?, *req(&p.m, "m")?, eta)?;
    let mut sampled = Vec::new();
    if let Some(s) = &p.sample_n {
        for n in indices("sample-n", &Some(s.clone()))? {
            sampled.push(sampled_inclusion(&phi, &psi, &map, n, *req(&p.samples, "samples")?, *req(&p.seed, "seed")?)?);
        }
    }
    let result = json!({
        "params": to_json(&psi.nilpotent_params()),
        "bound": to_json(&cert.bound()),
        "certificate": to_json(&cert),
        "sampled": to_json(&sampled),
    });
    if let Some(bad) = sampled.iter().find(|s| s.violations > 0) {
        return Err(Failure::verification(
            format!("N = {}: {} sampled elements map outside the target", bad.n, bad.violations),
            result,
        ));
    }
    Ok(result)
}

pub fn density(p: &DensityArgs) -> Outcome {
    let g = group(&p.group)?;
    let a = set_family(&g, &p.set)?;
    let f = box_folner(
        &g,
        SideSchedule::Linear {
            factor: *req(&p.factor, "factor")?,
        },
        convention(&p.convention)?,
    )?;
    let table = density_along(&a, &f, range("n", &p.n)?)?;
    Ok(json!({ "family": f.label(), "table": to_json(&table) }))
}

pub fn thin(p: &ThinArgs) -> Outcome {
    let g = group(&p.group)?;
    let f = box_folner(
        &g,
        SideSchedule::Linear {
            factor: *req(&p.factor, "factor")?,
        },
        convention(&p.convention)?,
    )?;
    let axes = parse_list("axes", req(&p.axes, "axes")?)
        .map_err(Failure::invalid)?
        .into_iter()
        .map(|a| usize::try_from(a).map_err(|_| Failure::invalid("invalid value for `axes`")))
        .collect::<Result<Vec<_>, _>>()?;
    let q = match req(&p.q, "q")?.as_str() {
        "auto" => QSchedule::Auto,
        "sqrt" => QSchedule::Sqrt,
        s => QSchedule::Table {
            values: parse_list("q", s)
                .map_err(Failure::invalid)?
                .into_iter()
                .map(|v| u64::try_from(v).map_err(|_| Failure::invalid("invalid value for `q`")))
                .collect::<Result<_, _>>()?,
        },
    };
    let enforced = parse_list("enforced", req(&p.enforced, "enforced")?)
        .map_err(Failure::invalid)?
        .into_iter()
        .map(Int::from)
        .collect();
    let cfg = ThinConfig {
        axes,
        q,
        enforced,
        max_steps: *req(&p.steps, "steps")?,
        max_index: *req(&p.max_index, "max-index")?,
    };
    let r = thin_folner(&f, &cfg)?;
    Ok(json!({ "family": f.label(), "stages": to_json(&r.stages) }))
}

fn side(v: &Option<String>) -> Result<ShiftSide, Failure> {
    match req(v, "side")?.as_str() {
        "left-shift" | "left" => Ok(ShiftSide::LeftShift),
        "right-shift" | "right" => Ok(ShiftSide::RightShift),
        other => Err(Failure::invalid(format!("invalid value for `side`: `{other}`"))),
    }
}

fn order(v: &Option<String>) -> Result<Order, Failure> {
    match req(v, "order")?.as_str() {
        "increasing" => Ok(Order::Increasing),
        "decreasing" => Ok(Order::Decreasing),
        "both" => Ok(Order::Both),
        other => Err(Failure::invalid(format!("invalid value for `order`: `{other}`"))),
    }
}

pub fn search(p: &SearchArgs) -> Outcome {
    let g = group(&p.group)?;
    let a = set_family(&g, &p.set)?;
    let cfg = SearchConfig {
        k: *req(&p.k, "k")?,
        side: side(&p.side)?,
        order: order(&p.order)?,
        require_b_in_target: *req(&p.require_b_in_a, "require-b-in-a")?,
        chunk: *req(&p.chunk, "chunk")?,
        node_budget: *req(&p.node_budget, "node-budget")?,
    };
    let cands = graded_ball(&g, *req(&p.candidate_radius, "candidate-radius")?);
    let ts = graded_ball(&g, *req(&p.t_radius, "t-radius")?);
    let out = search_witness(&a, &cands, &ts, &cfg)?;
    Ok(json!({ "found": out.witness.is_some(), "witness": to_json(&out.witness), "stats": to_json(&out.stats) }))
}

pub fn verify(p: &VerifyWitnessArgs) -> Outcome {
    let path = req(&p.witness, "witness")?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("invalid value for `witness`: {}: {e}", path.display())))?;
    let w: Witness =
        serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("invalid value for `witness`: {e}")))?;
    let a = set_family(&w.group, &p.set)?;
    let report = verify_witness(&a, &w)?;
    let result = json!({ "witness": to_json(&w), "report": to_json(&report) });
    if !report.passed {
        return Err(Failure::verification(
            format!("{} pair products and {} elements miss the set", report.failures.len(), report.outside_target.len()),
            result,
        ));
    }
    Ok(result)
}

pub fn counterexample(p: &CounterexampleArgs) -> Outcome {
    let which = req(&p.which, "which")?;
    let m = indices("M", &p.m_scales)?;
    let t = *req(&p.tbound, "tbound")?;
    let (lo, hi) = (*req(&p.b_lo, "b-lo")?, *req(&p.b_hi, "b-hi")?);
    let window = [(lo, hi); 3];
    let (cert, validation) = match which.as_str() {
        "odd-scales" => {
            let n = indices("N", &p.n_scales)?;
            let cert = verify_odd_scale_slice(&n, &m, t)?;
            let validation = if *req(&p.validate_parity, "validate-parity")? && !n.is_empty() && !m.is_empty() {
                let sub = SliceConfig {
                    form: ProductForm::BcT,
                    target: prodset::sets::HeisenbergScales::odd(),
                    b: BSource::Scales {
                        family: prodset::sets::HeisenbergScales::odd(),
                        scales: vec![*n.iter().min().expect("non-empty")],
                    },
                    c_family: prodset::sets::HeisenbergScales::odd(),
                    c_scales: vec![*m.iter().min().expect("non-empty")],
                    t_bound: t.min(3),
                    parity_filter: true,
                    strategy: Strategy::Auto,
                    budget: cert.config.budget,
                };
                Some(validate_parity_filter(&sub)?)
            } else {
                None
            };
            (cert, validation)
        }
        "full-scales" => (verify_full_scale_slice(window, &m, t)?, None),
        "conjugated" => (verify_conjugated_slice(window, &m, t)?, None),
        other => return Err(Failure::invalid(format!("invalid value for `which`: `{other}`"))),
    };
    let result = json!({
        "violations": cert.violations.len(),
        "certificate": to_json(&cert),
        "parity_validation": validation.as_ref().map(|v| json!({
            "agree": v.agree,
            "filtered_hits": v.filtered.hits,
            "unfiltered_hits": v.unfiltered.hits,
            "unfiltered_triples": v.unfiltered.triples,
            "hits_in_dropped_classes": v.hits_in_dropped_classes,
        })),
    });
    if let Some(v) = &validation {
        if !v.agree {
            return Err(Failure::verification("the parity filter disagrees with unfiltered enumeration", result));
        }
    }
    Ok(result)
}

pub fn extract(p: &ExtractArgs) -> Outcome {
    let g = group(&p.group)?;
    let a = set_family(&g, &p.set)?;
    let cfg = ExtractConfig::balls(
        &g,
        *req(&p.k, "k")?,
        *req(&p.t_radius, "t-radius")?,
        *req(&p.s_radius, "s-radius")?,
        *req(&p.window_radius, "window-radius")?,
        *req(&p.domain_radius, "domain-radius")?,
    );
    let out = end_to_end_extract(&a, &cfg)?;
    Ok(json!({
        "witness": to_json(&out.witness),
        "s": to_json(&out.s),
        "approach_found": out.approach.len(),
        "trace": to_json(&out.extraction.trace),
        "report": to_json(&out.report),
        "attempts": out.attempts.len(),
    }))
}
