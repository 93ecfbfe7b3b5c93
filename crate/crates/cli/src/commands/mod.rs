mod codebook;
pub mod common;
mod evaluate;
mod reformat;
mod retrieve;
mod score;
mod sweep;
mod train;

use crate::cli::Command;
use crate::error::CliResult;

pub fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Score(a) => score::run(a),
        Command::BuildCodebook(a) => codebook::run(a),
        Command::Reformat(a) => reformat::run(a),
        Command::Retrieve(a) => retrieve::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::SweepAlpha(a) => sweep::run(a),
        Command::TrainToy(a) => train::run(a),
    }
}
