use conslaw::catalog::Catalog;
use conslaw::conslaw::{check_witness, classify, verify_local, CurrentKind, Status};
use conslaw::mappings::{map_current, MappingVector};
use conslaw::numgrid::{residual, IntegrationDomain, QuadratureSpec, Tolerance};
use conslaw::sysdef::ExactSolution;

use crate::report::{
    CheckEntry, Classification, CurrentRef, Echo, ListEntry, MappingReport, NumericReport, Rendered, Report, EXIT_FAIL,
    EXIT_OK, EXIT_UNDECIDED,
};
use crate::resolve::{failed, load, resolve, single, usage, CliError, Result};
use crate::{Command, Listing};

pub fn run(cmd: &Command, echo: Echo) -> Result<Report> {
    match cmd {
        Command::List { what } => list(*what, echo),
        Command::Check(target) => check(target, echo),
        Command::Classify { target, order_bound } => classify_cmd(target, *order_bound, echo),
        Command::Map { target, to, xi, order_bound } => map(target, to, xi, *order_bound, echo),
        Command::Numcheck {
            target,
            solution,
            domain,
            time,
            quad,
            levels,
            rtol,
            atol,
        } => {
            let q = QuadratureSpec::new(*quad, *levels).map_err(|e| usage(e.to_string()))?;
            let tol = Tolerance { relative: *rtol, absolute: *atol };
            numcheck(target, solution.as_deref(), domain.as_deref(), *time, q, tol, echo)
        }
    }
}

fn list(what: Listing, echo: Echo) -> Result<Report> {
    let cat = Catalog::load()?;
    let entries: Vec<ListEntry> = match what {
        Listing::Systems => cat
            .systems()
            .map(|s| ListEntry { id: s.id.clone(), system: None, kind: None, description: s.description.clone() })
            .collect(),
        Listing::Currents => cat
            .currents()
            .map(|c| ListEntry {
                id: c.id.clone(),
                system: Some(c.system_id.clone()),
                kind: Some(c.kind.name().to_string()),
                description: c.description.clone(),
            })
            .collect(),
        Listing::Solutions => cat
            .solutions()
            .map(|s| ListEntry {
                id: s.id.clone(),
                system: Some(s.system_id.clone()),
                kind: None,
                description: s.description.clone(),
            })
            .collect(),
        Listing::Vectorfields => cat
            .vectorfields()
            .map(|v| ListEntry {
                id: v.id.clone(),
                system: None,
                kind: Some(v.constraint.name().to_string()),
                description: v.description.clone(),
            })
            .collect(),
    };
    let mut r = Report::new(echo, "PASS", EXIT_OK);
    r.listing = Some(entries);
    Ok(r)
}

fn check(target: &crate::Target, echo: Echo) -> Result<Report> {
    let (cat, added) = load(target)?;
    let res = resolve(&cat, &added, target)?;
    no_leftovers(&res.rest)?;
    let mut entries = Vec::new();
    for c in &res.currents {
        let residual = verify_local(c, &res.system).map_err(|e| failed(e.to_string()))?;
        entries.push(CheckEntry {
            system: res.system.id.clone(),
            current: CurrentRef::of(c),
            passed: residual.is_zero(),
            residual: residual.to_string(),
        });
    }
    let all = entries.iter().all(|e| e.passed);
    let mut r = Report::new(echo, if all { "PASS" } else { "FAIL" }, if all { EXIT_OK } else { EXIT_FAIL });
    r.system = Some(res.system.id.clone());
    if let [c] = res.currents.as_slice() {
        r.current = Some(CurrentRef::of(c));
    }
    r.checks = Some(entries);
    Ok(r)
}

fn verified(c: &conslaw::conslaw::ConservedCurrent, sys: &conslaw::sysdef::PdeSystem) -> Result<()> {
    let residual = verify_local(c, sys).map_err(|e| failed(e.to_string()))?;
    if residual.is_zero() {
        Ok(())
    } else {
        Err(failed(format!("`{}` is not conserved; residual {residual}", c.id)))
    }
}

fn classify_cmd(target: &crate::Target, order_bound: Option<u32>, echo: Echo) -> Result<Report> {
    let (cat, added) = load(target)?;
    let res = resolve(&cat, &added, target)?;
    no_leftovers(&res.rest)?;
    let c = single(&res)?;
    verified(c, &res.system)?;
    let v = classify(c, &res.system, order_bound).map_err(|e| failed(e.to_string()))?;
    let checked = match &v.witness {
        Some(w) => Some(check_witness(c, w, &res.system).map_err(|e| failed(e.to_string()))?),
        None => None,
    };
    let code = if v.status == Status::Inconclusive { EXIT_UNDECIDED } else { EXIT_OK };
    let mut r = Report::new(echo, &v.status.to_string(), code);
    r.system = Some(res.system.id.clone());
    r.current = Some(CurrentRef::of(c));
    r.classification = Some(Classification::of(&v, checked));
    Ok(r)
}

fn mapping_vector(cat: &Catalog, name: &str) -> Result<MappingVector> {
    cat.vectorfield(name)
        .cloned()
        .or_else(|| MappingVector::unit(name))
        .ok_or_else(|| failed(format!("unknown mapping vector `{name}`")))
}

fn map(target: &crate::Target, to: &str, xi: &str, order_bound: Option<u32>, echo: Echo) -> Result<Report> {
    let (cat, added) = load(target)?;
    let res = resolve(&cat, &added, target)?;
    no_leftovers(&res.rest)?;
    let c = single(&res)?;
    let to_kind = CurrentKind::from_name(to).ok_or_else(|| usage(format!("unknown kind `{to}`")))?;
    let xi = mapping_vector(&cat, xi)?;
    verified(c, &res.system)?;
    let mapped = map_current(c, &xi, to_kind).map_err(|e| failed(e.to_string()))?;
    let residual = verify_local(&mapped, &res.system).map_err(|e| failed(e.to_string()))?;
    let fail = |e: conslaw::conslaw::ConsError| failed(e.to_string());
    let source = classify(c, &res.system, order_bound).map_err(fail)?;
    let image = classify(&mapped, &res.system, order_bound).map_err(fail)?;
    let checked = match &image.witness {
        Some(w) => Some(check_witness(&mapped, w, &res.system).map_err(fail)?),
        None => None,
    };
    let verifies = residual.is_zero();
    let code = match (verifies, image.status) {
        (false, _) => EXIT_FAIL,
        (true, Status::Inconclusive) => EXIT_UNDECIDED,
        _ => EXIT_OK,
    };
    let verdict = if verifies { image.status.to_string() } else { "FAIL".to_string() };
    let mut r = Report::new(echo, &verdict, code);
    r.system = Some(res.system.id.clone());
    r.current = Some(CurrentRef::of(c));
    r.mapping = Some(MappingReport {
        xi: xi.id.clone(),
        xi_components: xi.components.to_string(),
        target: to_kind,
        mapped: Rendered::of(&mapped),
        residual: residual.to_string(),
        verifies,
        source_status: source.status,
        image: Classification::of(&image, checked),
    });
    Ok(r)
}

fn default_domain(kind: CurrentKind) -> IntegrationDomain {
    let name = match kind {
        CurrentKind::Volumetric => "box",
        CurrentKind::SurfaceFlux => "rect",
        CurrentKind::Circulatory | CurrentKind::SpatialCurl => "circle",
        CurrentKind::SpatialDiv => "boxboundary",
        CurrentKind::SpatialGrad => "segment",
    };
    name.parse().expect("default domains parse")
}

fn solution_for(cat: &Catalog, name: Option<&str>, system: &str) -> Result<ExactSolution> {
    if let Some(n) = name {
        return Ok(cat.solution_for(n, system)?);
    }
    let own: Vec<&ExactSolution> = cat.solutions().filter(|s| s.system_id == system).collect();
    if let [one] = own.as_slice() {
        return Ok((*one).clone());
    }
    let usable: Vec<ExactSolution> = cat.solutions().filter_map(|s| cat.solution_for(&s.id, system).ok()).collect();
    match usable.as_slice() {
        [one] => Ok(one.clone()),
        [] => Err(failed(format!("no registered solution solves `{system}`"))),
        _ => Err(usage(format!("several solutions solve `{system}`; pass --solution"))),
    }
}

fn numcheck(
    target: &crate::Target,
    solution: Option<&str>,
    domain: Option<&str>,
    time: Option<f64>,
    q: QuadratureSpec,
    tol: Tolerance,
    echo: Echo,
) -> Result<Report> {
    let (cat, added) = load(target)?;
    let mut res = resolve(&cat, &added, target)?;
    let c = single(&res)?.clone();
    let (mut solution, mut domain, mut time) = (solution.map(str::to_string), domain.map(str::to_string), time);
    while let Some(tok) = res.rest.pop_front() {
        if let Some(v) = tok.strip_prefix("t=") {
            time = Some(v.parse().map_err(|_| usage(format!("bad time `{tok}`")))?);
        } else if solution.is_none() && cat.solution(&tok).is_some() {
            solution = Some(tok);
        } else if domain.is_none() {
            domain = Some(tok);
        } else {
            return Err(usage(format!("unexpected argument `{tok}`")));
        }
    }
    let sol = solution_for(&cat, solution.as_deref(), &res.system.id)?;
    let dom = match domain {
        Some(d) => d.parse::<IntegrationDomain>().map_err(|e| usage(format!("domain `{d}`: {e}")))?,
        None => default_domain(c.kind),
    };
    let t = time.unwrap_or(0.0);
    let integral = residual(&c, &dom, &sol, t, &q).map_err(|e| failed(e.to_string()))?;
    let passes = integral.passes(&tol);
    let (verdict, code) = if !integral.converged {
        ("UNCERTIFIED", EXIT_UNDECIDED)
    } else if passes {
        ("PASS", EXIT_OK)
    } else {
        ("FAIL", EXIT_FAIL)
    };
    let mut r = Report::new(echo, verdict, code);
    r.system = Some(res.system.id.clone());
    r.current = Some(CurrentRef::of(&c));
    r.numeric = Some(NumericReport { solution: sol.id.clone(), quadrature: q, tolerance: tol, passes, integral });
    Ok(r)
}

fn no_leftovers(rest: &std::collections::VecDeque<String>) -> Result<()> {
    match rest.front() {
        None => Ok(()),
        Some(tok) => Err(CliError::Usage(format!("unexpected argument `{tok}`"))),
    }
}
