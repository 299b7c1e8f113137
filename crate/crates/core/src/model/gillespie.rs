//! Continuous-time SIR on the weighted complete block graph.
//!
//! Edges inside a community carry rate `q1` per day, edges across communities
//! `q2`, and each infected individual recovers at rate `r`. The simulation is
//! the direct (exponential clock) method over community-level compartments:
//! a susceptible in community `j` feels total pressure
//! `q1 * I_j + q2 * (I - I_j)`, which is the superposition of its per-edge
//! clocks.

use rand::Rng;

use super::{ModelError, ModelParams};

/// Simulates `horizon` days with no testing and returns the number of
/// infected individuals at each integer day `0..horizon`.
pub fn gillespie_trajectory<R: Rng + ?Sized>(
    params: &ModelParams,
    horizon: usize,
    rng: &mut R,
) -> Result<Vec<usize>, ModelError> {
    params.validate()?;
    let communities = params.communities();
    let mut susceptible = vec![0usize; communities];
    let mut infected = vec![0usize; communities];
    for i in 0..params.population {
        let c = params.community_of(i);
        if rng.random::<f64>() < params.p_init {
            infected[c] += 1;
        } else {
            susceptible[c] += 1;
        }
    }

    let mut out = vec![0usize; horizon];
    let mut next_day = 0usize;
    let mut time = 0.0_f64;
    let mut pressure = vec![0.0_f64; communities];

    while next_day < horizon {
        let total_infected: usize = infected.iter().sum();
        let mut total_rate = params.recovery * total_infected as f64;
        for j in 0..communities {
            let force =
                params.q1 * infected[j] as f64 + params.q2 * (total_infected - infected[j]) as f64;
            pressure[j] = susceptible[j] as f64 * force;
            total_rate += pressure[j];
        }

        let wait = if total_rate > 0.0 {
            let u: f64 = rng.random();
            -(1.0 - u).ln() / total_rate
        } else {
            f64::INFINITY
        };
        while next_day < horizon && (next_day as f64) < time + wait {
            out[next_day] = total_infected;
            next_day += 1;
        }
        if next_day >= horizon {
            break;
        }
        time += wait;

        let mut target = rng.random::<f64>() * total_rate;
        let mut fired = false;
        for j in 0..communities {
            let recover = params.recovery * infected[j] as f64;
            if target < recover {
                infected[j] -= 1;
                fired = true;
                break;
            }
            target -= recover;
            if target < pressure[j] {
                susceptible[j] -= 1;
                infected[j] += 1;
                fired = true;
                break;
            }
            target -= pressure[j];
        }
        if !fired {
            // Rounding left `target` just past the last bucket: fire the last
            // event with positive rate.
            for j in (0..communities).rev() {
                if pressure[j] > 0.0 {
                    susceptible[j] -= 1;
                    infected[j] += 1;
                    break;
                }
                if infected[j] > 0 && params.recovery > 0.0 {
                    infected[j] -= 1;
                    break;
                }
            }
        }
    }
    Ok(out)
}
