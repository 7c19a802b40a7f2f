//! Runs a subcommand against a workbench service.

use voi_client::Client;
use voi_core::model::file::{save_model, ModelFile};
use voi_protocol::*;

use crate::{cluster, load, load_extension, runtime, Cli, Command, Failure, RefineReport, Report};

pub fn execute(url: &str, cli: &Cli) -> Result<Report, Failure> {
    let client = Client::new(url)?;
    runtime()?.block_on(dispatch(&client, cli))
}

async fn open(client: &Client, path: &std::path::Path) -> Result<String, Failure> {
    let model = load(path)?;
    Ok(client.create_session(&ModelFile::from(&model)).await?.id)
}

async fn dispatch(client: &Client, cli: &Cli) -> Result<Report, Failure> {
    Ok(match &cli.command {
        Command::Eval { model } => {
            let id = open(client, model).await?;
            Report::Eval(client.evaluate(&id).await?.body)
        }
        Command::Refine {
            model,
            target,
            with,
            output,
        } => {
            let id = open(client, model).await?;
            let req = RefineRequest {
                expected_revision: Some(0),
                target: target.clone(),
                extension: load_extension(with)?,
            };
            client.refine(&id, &req).await?;
            let refined = client.model(&id).await?.model.into_model()?;
            save_model(&refined, output)
                .map_err(|e| Failure::invalid(format!("cannot write {}: {e}", output.display())))?;
            Report::Refine(RefineReport {
                output: output.clone(),
                evaluation: client.evaluate(&id).await?.body,
            })
        }
        Command::Voi { model, observe } => {
            let id = open(client, model).await?;
            let req = VoiRequest {
                observe: observe.clone(),
            };
            Report::Voi(client.voi(&id, &req).await?.body)
        }
        Command::Focus { model, cluster: refs } => {
            let id = open(client, model).await?;
            let req = FocusRequest {
                cluster: cluster(refs),
                samples: cli.samples,
                seed: cli.seed,
            };
            Report::Focus(client.focus(&id, &req).await?.body)
        }
        Command::Rank { model } => {
            let id = open(client, model).await?;
            let query = RankQuery {
                samples: cli.samples,
                seed: cli.seed,
            };
            Report::Rank(client.rank(&id, &query).await?.body)
        }
        Command::Sweep {
            model,
            param,
            grid,
            range,
        } => {
            let id = open(client, model).await?;
            let req = SweepRequest {
                param: param.clone(),
                grid: *grid,
                range: *range,
            };
            Report::Sweep(client.sweep(&id, &req).await?.body)
        }
        Command::Bounds {
            model,
            intervals,
            target: (variable, outcome),
        } => {
            let id = open(client, model).await?;
            let req = BoundsRequest {
                intervals: intervals
                    .iter()
                    .map(|(param, iv)| IntervalOverride {
                        param: param.clone(),
                        low: iv.low(),
                        high: iv.high(),
                    })
                    .collect(),
                target: format!("{variable}={outcome}"),
            };
            Report::Bounds(client.bounds(&id, &req).await?.body)
        }
        Command::Serve { .. } | Command::Validate { .. } => unreachable!("rejected before dispatch"),
    })
}
