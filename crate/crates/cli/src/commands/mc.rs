use serde::Serialize;
use swipt_core::mc_oracle::{estimate_coverage, estimate_mi, McEstimate};
use swipt_core::{channel, DiscreteAmplitudeDistribution};

use crate::args::McArgs;
use crate::doc::SolutionDoc;
use crate::{Exit, Failure};

use super::emit;

#[derive(Debug, Serialize)]
struct EstimateDoc {
    mean: f64,
    std_error: f64,
}

impl From<McEstimate> for EstimateDoc {
    fn from(e: McEstimate) -> Self {
        EstimateDoc { mean: e.mean, std_error: e.std_error }
    }
}

#[derive(Debug, Serialize)]
struct McDoc {
    points: Vec<f64>,
    probs: Vec<f64>,
    samples: u64,
    seed: u64,
    rng: &'static str,
    mi_nats: EstimateDoc,
    quadrature_mi_nats: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    coverage: Option<CoverageDoc>,
}

#[derive(Debug, Serialize)]
struct CoverageDoc {
    al: f64,
    au: f64,
    estimate: EstimateDoc,
    quadrature: f64,
}

pub fn run(args: McArgs) -> Result<Exit, Failure> {
    let law = match (&args.solution, &args.points, &args.probs) {
        (Some(path), _, _) => SolutionDoc::read(path)?.distribution()?,
        (None, Some(pts), Some(ps)) => DiscreteAmplitudeDistribution::new(pts.clone(), ps.clone())?,
        _ => return Err(Failure::usage(anyhow::anyhow!("give --solution or --points with --probs"))),
    };
    let mi = estimate_mi(&law, args.samples, args.seed)?;
    let coverage = match args.window.as_deref() {
        Some(&[al, au]) => Some(CoverageDoc {
            al,
            au,
            estimate: estimate_coverage(&law, al, au, args.samples, args.seed)?.into(),
            quadrature: swipt_core::constraints::oop_coverage(&law, al, au)?,
        }),
        Some(_) => return Err(Failure::usage(anyhow::anyhow!("--window takes exactly two values A_l,A_u"))),
        None => None,
    };
    let doc = McDoc {
        points: law.points().to_vec(),
        probs: law.probs().to_vec(),
        samples: args.samples,
        seed: args.seed,
        rng: "ChaCha20",
        mi_nats: mi.into(),
        quadrature_mi_nats: channel::mutual_information(&law)?,
        coverage,
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("finite values serialize");
    json.push('\n');
    emit(args.out.as_deref(), &json)?;
    Ok(Exit::Ok)
}
