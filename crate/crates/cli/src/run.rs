use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use vertexkit::combinat::perfect_matchings;
use vertexkit::deform::{
    associativity_chain, hochschild_delta, random_cochain, translation_check, unit_check, ybe_check, ContractionCochain,
    LatticeR, PerturbedR, RMatrix, TensorSeries, TensorState,
};
use vertexkit::freefield::{FieldTheorySpec, FreeField, WickMonomial};
use vertexkit::identities::{borcherds_check, IdentityInstance, ModeTable, VertexAlgebra};
use vertexkit::lattice::{LatticeSpec, LatticeState, LatticeVA};
use vertexkit::linear::Lin;
use vertexkit::series::{Localizer, Series, VarGroup};
use vertexkit::sieves::Sieve;
use vertexkit::{Dual, Error, Q};

use crate::config::{Algebra, BorcherdsTask, CocycleMode, CocycleTask, Config, OpeTask, SievesTask, StateSpec, TaskKind, TaskSpec, YbeTask};
use crate::report::{Record, Report, Status};
use crate::wire;

/// Which tasks a subcommand runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selection {
    All,
    Only(String),
}

struct Outcome {
    pass: bool,
    summary: String,
    witnesses: Vec<Value>,
}

enum TaskError {
    Core(Error),
    Input(String),
}

impl From<Error> for TaskError {
    fn from(e: Error) -> Self {
        TaskError::Core(e)
    }
}

type TaskResult = Result<Outcome, TaskError>;

enum Instance {
    None,
    Lattice(LatticeVA<Q>, u32),
    Free(FreeField<Q>, u32),
}

fn build(alg: &Option<Algebra>) -> Result<Instance, TaskError> {
    Ok(match alg {
        None => Instance::None,
        Some(Algebra::Lattice {
            gram,
            weight_cap,
            series_cap,
        }) => Instance::Lattice(
            LatticeVA::new(LatticeSpec::new(gram.clone(), *weight_cap, *series_cap)?),
            *series_cap,
        ),
        Some(Algebra::FreeField { dim, form, cap }) => {
            let spec = match form {
                None if *dim == 1 => FieldTheorySpec::free_scalar_1d(*cap)?,
                None => FieldTheorySpec::free_scalar(vertexkit::series::QuadForm::minkowski(*dim), *cap)?,
                Some(f) => FieldTheorySpec::free_scalar(f.clone(), *cap)?,
            };
            Instance::Free(FreeField::new(spec), *cap)
        }
    })
}

fn describe(alg: &Option<Algebra>) -> Option<String> {
    alg.as_ref().map(|a| match a {
        Algebra::Lattice {
            gram,
            weight_cap,
            series_cap,
        } => format!("lattice gram={gram:?} weight_cap={weight_cap} series_cap={series_cap}"),
        Algebra::FreeField { dim, cap, .. } => format!("freefield dim={dim} cap={cap}"),
    })
}

fn lattice_state(s: &StateSpec, va: &LatticeVA<Q>, key: &str) -> Result<LatticeState, TaskError> {
    s.lattice(va.spec().rank()).map_err(|m| TaskError::Input(format!("{key}: {m}")))
}

fn field_state(s: &StateSpec, ff: &FreeField<Q>, key: &str) -> Result<WickMonomial, TaskError> {
    s.field(ff.spec().dim()).map_err(|m| TaskError::Input(format!("{key}: {m}")))
}

fn ope_generic<A: VertexAlgebra<Q>>(alg: &A, cap: u32, u: A::Basis, v: A::Basis, t: &OpeTask) -> TaskResult
where
    A::Basis: Display,
{
    let table = ModeTable::new(alg, cap);
    let (u, v) = (Lin::basis(u), Lin::basis(v));
    let bound = table.bound(&u, &v)?;
    let n_min = t.n_min.unwrap_or(-1);
    let n_max = t.n_max.unwrap_or(bound.map_or(n_min, |b| b - 1));
    let mut witnesses = Vec::new();
    for n in n_min..=n_max {
        let r = table.mode(&u, n, &v)?;
        witnesses.push(json!({"n": n, "state": wire::linear(r.iter())}));
    }
    Ok(Outcome {
        pass: true,
        summary: format!("modes {n_min}..={n_max}, vanishing from {}", bound.map_or("every n".into(), |b| b.to_string())),
        witnesses,
    })
}

fn ope(inst: &Instance, t: &OpeTask) -> TaskResult {
    match inst {
        Instance::Lattice(va, cap) => {
            let u = lattice_state(&t.u, va, "u")?;
            let v = lattice_state(&t.v, va, "v")?;
            ope_generic(va, *cap, u, v, t)
        }
        Instance::Free(ff, cap) => {
            let u = field_state(&t.u, ff, "u")?;
            let v = field_state(&t.v, ff, "v")?;
            ope_generic(ff, *cap, u, v, t)
        }
        Instance::None => Err(TaskError::Input("ope needs an algebra".into())),
    }
}

fn npoint(inst: &Instance, points: usize) -> TaskResult {
    let Instance::Free(ff, _) = inst else {
        return Err(TaskError::Input("npoint needs a free field".into()));
    };
    let fields = vec![0; points];
    let value = ff.n_point(&fields)?;
    let vars = value.vars();
    let mut reference = Series::<Q>::zero(vars);
    let matchings = perfect_matchings(points);
    for m in &matchings {
        reference = reference.add(&ff.matching_value(&fields, m)?)?;
    }
    let pass = value.agrees_with(&reference)?;
    Ok(Outcome {
        pass,
        summary: format!("{points}-point function against {} matchings", matchings.len()),
        witnesses: vec![wire::scalar_series(&value)],
    })
}

fn borcherds_generic<A: VertexAlgebra<Q>>(
    alg: &A,
    cap: u32,
    triples: Vec<(A::Basis, A::Basis, A::Basis)>,
    t: &BorcherdsTask,
) -> TaskResult
where
    A::Basis: Display,
{
    let table = ModeTable::new(alg, cap);
    let [lo, hi] = t.range.unwrap_or([-2, 2]);
    let span = |x: Option<i64>| x.map_or((lo, hi), |v| (v, v));
    let (ms, ns, qs) = (span(t.m), span(t.n), span(t.q));
    let mut count = 0usize;
    for (u, v, w) in &triples {
        for m in ms.0..=ms.1 {
            for n in ns.0..=ns.1 {
                for q in qs.0..=qs.1 {
                    let inst = IdentityInstance {
                        u: Lin::basis(u.clone()),
                        v: Lin::basis(v.clone()),
                        w: Lin::basis(w.clone()),
                        m,
                        n,
                        q,
                    };
                    let out = borcherds_check(&table, &inst)?;
                    count += 1;
                    if !out.passed() {
                        return Ok(Outcome {
                            pass: false,
                            summary: format!("failed at u={u} v={v} w={w} m={m} n={n} q={q}"),
                            witnesses: vec![json!({
                                "u": u.to_string(), "v": v.to_string(), "w": w.to_string(),
                                "m": m, "n": n, "q": q,
                                "difference": wire::linear(out.witness().iter()),
                            })],
                        });
                    }
                }
            }
        }
    }
    Ok(Outcome {
        pass: true,
        summary: format!("{count} instances over {} triples", triples.len()),
        witnesses: vec![],
    })
}

fn borcherds(inst: &Instance, t: &BorcherdsTask) -> TaskResult {
    let given = [&t.u, &t.v, &t.w].iter().filter(|s| s.is_some()).count();
    if given != 0 && given != 3 {
        return Err(TaskError::Input("give all of u, v, w or none of them".into()));
    }
    match inst {
        Instance::Lattice(va, cap) => {
            let triples = if given == 3 {
                vec![(
                    lattice_state(t.u.as_ref().unwrap(), va, "u")?,
                    lattice_state(t.v.as_ref().unwrap(), va, "v")?,
                    lattice_state(t.w.as_ref().unwrap(), va, "w")?,
                )]
            } else {
                let b = va.basis_states(t.max_weight.unwrap_or(1))?;
                let mut out = Vec::new();
                for u in &b {
                    for v in &b {
                        for w in &b {
                            out.push((u.clone(), v.clone(), w.clone()));
                        }
                    }
                }
                out
            };
            borcherds_generic(va, *cap, triples, t)
        }
        Instance::Free(ff, cap) => {
            if given != 3 {
                return Err(TaskError::Input("free-field identities need explicit u, v, w".into()));
            }
            let triple = (
                field_state(t.u.as_ref().unwrap(), ff, "u")?,
                field_state(t.v.as_ref().unwrap(), ff, "v")?,
                field_state(t.w.as_ref().unwrap(), ff, "w")?,
            );
            borcherds_generic(ff, *cap, vec![triple], t)
        }
        Instance::None => Err(TaskError::Input("borcherds needs an algebra".into())),
    }
}

fn sieves(t: &SievesTask) -> TaskResult {
    if t.n == 0 || t.d == 0 {
        return Err(TaskError::Input("n and d must be positive".into()));
    }
    let all = Sieve::enumerate(t.n, t.d);
    let expected = (t.d as u128).pow(t.n as u32 - 1);
    let rendered: Vec<String> = all.iter().map(Sieve::render).collect();
    let distinct = rendered.iter().collect::<BTreeSet<_>>().len() == rendered.len();
    let mut round_trip = true;
    for (s, r) in all.iter().zip(&rendered) {
        round_trip &= Sieve::parse(r, t.d).map_or(false, |p| &p == s);
    }
    let pass = all.len() as u128 == expected && distinct && round_trip;
    Ok(Outcome {
        pass,
        summary: format!(
            "{} sieves of width {} and depth {} (expected {expected}, distinct {distinct}, round trip {round_trip})",
            all.len(),
            t.n,
            t.d
        ),
        witnesses: vec![json!(rendered)],
    })
}

fn tensor_series(s: &TensorSeries<Q>) -> Value {
    wire::series(s, |t: &TensorState<Q>| {
        Value::Array(
            t.0.iter()
                .map(|(k, c)| {
                    let label = k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ⊗ ");
                    json!([label, wire::rational(c)])
                })
                .collect(),
        )
    })
}

fn ybe(inst: &Instance, t: &YbeTask, seed: u64) -> TaskResult {
    let Instance::Lattice(va, _) = inst else {
        return Err(TaskError::Input("ybe needs a lattice".into()));
    };
    let spec = va.spec().clone();
    let rank = spec.rank();
    let base = LatticeR::<Q>::new(spec);
    let states = va.basis_states(t.max_weight.unwrap_or(1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = t.samples.unwrap_or(10);
    let mut triples: Vec<[LatticeState; 3]> = (0..samples)
        .map(|_| std::array::from_fn(|_| states[rng.gen_range(0..states.len())].clone()))
        .collect();
    let mut a = vec![0; rank];
    a[0] = 1;
    let neg: Vec<i64> = a.iter().map(|x| -x).collect();
    let (ea, eb) = (LatticeState::exp(&a), LatticeState::exp(&neg));
    let perturbed;
    let r: &dyn RMatrix<Q> = if t.perturb.unwrap_or(false) {
        let vars = VarGroup::points(2);
        let extra = TensorSeries::constant(vars, TensorState::basis(vec![eb.clone(), ea.clone()]))
            .div_localizer(&Localizer::Difference(0, 1), 1)?;
        perturbed = PerturbedR {
            base: &base,
            extra: BTreeMap::from([((ea.clone(), eb.clone()), extra)]),
        };
        triples.insert(0, [ea.clone(), eb.clone(), eb.clone()]);
        &perturbed
    } else {
        &base
    };
    let mut witnesses = Vec::new();
    let mut failures = Vec::new();
    for s in &states {
        if !unit_check(r, s)? {
            failures.push(format!("unit axiom at {s}"));
        }
    }
    for [u, v, w] in &triples {
        if !translation_check(r, u, v)? {
            failures.push(format!("translation invariance at {u}, {v}"));
        }
        if let Some(d) = ybe_check(r, u, v, w)? {
            failures.push(format!("YBE at {u}, {v}, {w}"));
            witnesses.push(json!({"triple": [u.to_string(), v.to_string(), w.to_string()], "difference": tensor_series(&d)}));
        }
        let chain = associativity_chain(r, u, v, w)?;
        if !chain.all() {
            failures.push(format!("associativity chain at {u}, {v}, {w}: {chain:?}"));
        }
    }
    let pass = failures.is_empty();
    Ok(Outcome {
        pass,
        summary: if pass {
            format!("{} triples, {} unit checks", triples.len(), states.len())
        } else {
            failures.join("; ")
        },
        witnesses,
    })
}

fn cocycle(inst: &Instance, t: &CocycleTask, seed: u64) -> TaskResult {
    match t.mode.unwrap_or_default() {
        CocycleMode::Coboundary => {
            let va = match inst {
                Instance::Lattice(va, _) => va,
                _ => return Err(TaskError::Input("coboundary mode needs a lattice".into())),
            };
            let domain = va.basis_states(1)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = t.samples.unwrap_or(100);
            let tuples = t.tuples.unwrap_or(8);
            for k in 0..samples {
                let arity = 1 + k % 2;
                let f = random_cochain::<Q, _>(&mut rng, arity, &domain)?;
                let dd = hochschild_delta(&hochschild_delta(&f));
                for _ in 0..tuples {
                    let args: Vec<LatticeState> = (0..arity + 2).map(|_| domain[rng.gen_range(0..domain.len())].clone()).collect();
                    let v = dd.eval(&args)?;
                    if !v.is_zero() {
                        let labels: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                        return Ok(Outcome {
                            pass: false,
                            summary: format!("δ² ≠ 0 on cochain {k} at {labels:?}"),
                            witnesses: vec![wire::series(&v, |s| wire::linear(s.iter()))],
                        });
                    }
                }
            }
            Ok(Outcome {
                pass: true,
                summary: format!("δ² = 0 on {samples} random cochains, {tuples} tuples each"),
                witnesses: vec![],
            })
        }
        CocycleMode::Contraction => {
            type D = Dual<Q>;
            let vars = VarGroup::points(1);
            let prop = Series::<D>::localizer_power(vars, &Localizer::Point(0), 2)?.scale(&D::epsilon());
            let f = ContractionCochain { propagator: prop };
            let max = t.max_degree.unwrap_or(3);
            let mut monomials = Vec::new();
            for deg in 1..=max {
                for j in 0..=deg {
                    monomials.push(WickMonomial::from_factors([((0, vec![0]), deg - j), ((0, vec![1]), j)].into_iter().filter(|x| x.1 > 0)));
                }
            }
            let mut count = 0;
            for a in &monomials {
                for b in &monomials {
                    for c in &monomials {
                        let d = f.delta(a, b, c)?;
                        count += 1;
                        if !d.is_zero() {
                            return Ok(Outcome {
                                pass: false,
                                summary: format!("δf ≠ 0 at {a}, {b}, {c}"),
                                witnesses: vec![],
                            });
                        }
                    }
                }
            }
            Ok(Outcome {
                pass: true,
                summary: format!("δf = 0 on {count} triples of monomials up to degree {max}"),
                witnesses: vec![],
            })
        }
    }
}

fn run_task(inst: &Instance, task: &TaskKind, seed: u64) -> TaskResult {
    match task {
        TaskKind::Ope(t) => ope(inst, t),
        TaskKind::Npoint(t) => npoint(inst, t.points.unwrap_or(4)),
        TaskKind::Borcherds(t) => borcherds(inst, t),
        TaskKind::Sieves(t) => sieves(t),
        TaskKind::Ybe(t) => ybe(inst, t, seed),
        TaskKind::Cocycle(t) => cocycle(inst, t, seed),
    }
}

fn selected(cfg: &Config, sel: &Selection) -> Vec<TaskSpec> {
    match sel {
        Selection::All => cfg.tasks.clone(),
        Selection::Only(name) => {
            let picked: Vec<TaskSpec> = cfg.tasks.iter().filter(|t| t.kind.name() == name).cloned().collect();
            if picked.is_empty() {
                TaskKind::default_for(name)
                    .map(|kind| TaskSpec {
                        id: format!("{name}-default"),
                        kind,
                    })
                    .into_iter()
                    .collect()
            } else {
                picked
            }
        }
    }
}

/// Run the selected tasks in order. `seed` overrides the config seed.
pub fn run_config(cfg: &Config, sel: &Selection, seed: Option<u64>) -> Report {
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let tasks = selected(cfg, sel);
    let inst = build(&cfg.algebra);
    let mut records = Vec::with_capacity(tasks.len());
    for (index, t) in tasks.iter().enumerate() {
        let start = Instant::now();
        let result = match &inst {
            Ok(i) => run_task(i, &t.kind, seed),
            Err(TaskError::Core(e)) => Err(TaskError::Core(e.clone())),
            Err(TaskError::Input(m)) => Err(TaskError::Input(m.clone())),
        };
        let timing_ms = start.elapsed().as_secs_f64() * 1000.0;
        let (status, summary, witnesses) = match result {
            Ok(o) => (if o.pass { Status::Pass } else { Status::Fail }, o.summary, o.witnesses),
            Err(TaskError::Core(e)) => (Status::Error, e.to_string(), vec![]),
            Err(TaskError::Input(m)) => (Status::Error, m, vec![]),
        };
        records.push(Record {
            index,
            id: t.id.clone(),
            task: t.kind.name().to_string(),
            status,
            summary,
            witnesses,
            timing_ms,
        });
    }
    Report {
        subcommand: match sel {
            Selection::All => "verify-all".into(),
            Selection::Only(n) => n.clone(),
        },
        seed,
        algebra: describe(&cfg.algebra),
        records,
    }
}
