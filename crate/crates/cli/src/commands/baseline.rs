use swipt_core::constraints::feasible_pd_max;
use swipt_core::theory::{rdp_of_cscg, rdp_of_cscg_by_quadrature, time_sharing_plan};
use swipt_core::{channel, EvenPolynomial, Error};

use crate::args::BaselineArgs;
use crate::csv::num;
use crate::{Exit, Failure};

pub fn run(args: BaselineArgs) -> Result<Exit, Failure> {
    let c = channel::awgn_capacity(args.pa)?;
    println!("C = {} nats = {} bits", num(c), num(c / std::f64::consts::LN_2));
    let Some(alphas) = args.g else {
        if args.pd.is_some() || args.rp.is_some() {
            return Err(Failure::usage(anyhow::anyhow!("--pd and --rp need --g")));
        }
        return Ok(Exit::Ok);
    };
    let g = EvenPolynomial::new(alphas)?;
    let pr = rdp_of_cscg(args.pa, &g)?;
    println!("P_R = {} (quadrature {})", num(pr), num(rdp_of_cscg_by_quadrature(args.pa, &g)?));
    if let Some(rp) = args.rp {
        if !(rp > 0.0) || !rp.is_finite() {
            return Err(Failure::usage(anyhow::anyhow!("--rp must be positive and finite, got {rp}")));
        }
        g.check_positive_on(rp)?;
        println!("Pd_max = {}", num(feasible_pd_max(args.pa, rp, &g)));
    }
    if let Some(pd) = args.pd {
        println!("time sharing toward C at P_d = {pd}:");
        println!("l,tau,mi_nats,gap_nats,delivered_power");
        for &l in &args.ts_l {
            match time_sharing_plan(args.pa, pd, &g, l) {
                Ok(p) => println!("{},{},{},{},{}", l, num(p.tau), num(p.mi_nats), num(p.gap_nats), num(p.delivered_power)),
                Err(e @ Error::TailIndexTooSmall { .. }) => eprintln!("l = {l}: {e}"),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(Exit::Ok)
}
