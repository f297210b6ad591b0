mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::CliError;

/// Default suite when neither `--suite` nor `TMAC_SUITE` is given.
const DEFAULT_SUITE: &str = "TMAC-SHA256";

#[derive(Parser)]
#[command(name = "tmac", version, about = "Sign and verify time-windowed, replay-resistant message envelopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a fresh random master key.
    Keygen {
        #[arg(long)]
        out: PathBuf,
        /// Key length in bytes (at least 16).
        #[arg(long, default_value_t = 32)]
        bytes: usize,
        /// Replace an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Sign a message and emit a binary envelope.
    Sign {
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        suite: SuiteArg,
        /// Message file; stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// `random` or a hex string of at least 8 bytes.
        #[arg(long, default_value = "random")]
        identifier: String,
        /// Envelope file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        time: TimeArg,
    },
    /// Verify an envelope and print the outcome.
    Verify {
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        suite: SuiteArg,
        /// Envelope file; stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Persist seen identifiers here between runs.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Number of time windows accepted (1 to 4).
        #[arg(long, default_value_t = 1)]
        window: u64,
        /// File of hex identifiers the recipient handed out, one per line.
        #[arg(long)]
        assigned_ids: Option<PathBuf>,
        #[command(flatten)]
        time: TimeArg,
    },
    /// Time needed for a birthday attack on a c-bit MAC.
    AttackCost {
        #[arg(long)]
        bits: u32,
        /// Hashes per second.
        #[arg(long)]
        hashrate: f64,
        #[arg(long, default_value_t = 0.5)]
        probability: f64,
    },
    /// Run seeded collision searches against truncated TMAC tags.
    AttackSim {
        #[arg(long)]
        key: Option<PathBuf>,
        #[command(flatten)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 16)]
        bits: u32,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corpus size for the window-rollover check.
        #[arg(long, default_value_t = 1000)]
        corpus: usize,
        #[command(flatten)]
        time: TimeArg,
    },
    /// Datagram demo and scripted channel scenarios.
    #[command(subcommand)]
    Demo(DemoCommand),
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Sign and send messages as datagrams.
    Sender {
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        suite: SuiteArg,
        #[arg(long)]
        peer: String,
        #[arg(long, default_value = "0.0.0.0:0")]
        bind: String,
        /// Milliseconds between messages.
        #[arg(long, default_value_t = 1000)]
        interval: u64,
        /// Messages to send; stdin lines when none are given.
        messages: Vec<String>,
    },
    /// Receive datagrams and log one line per verification.
    Recipient {
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        suite: SuiteArg,
        #[arg(long)]
        listen: String,
        #[arg(long, default_value_t = 1)]
        window: u64,
        /// Stop after this many datagrams.
        #[arg(long)]
        limit: Option<usize>,
        /// Stop after this many seconds without traffic.
        #[arg(long)]
        idle: Option<u64>,
    },
    /// Relay datagrams to the recipient, then replay them.
    Adversary {
        #[arg(long)]
        listen: String,
        #[arg(long)]
        recipient: String,
        /// Datagrams to capture before replaying.
        #[arg(long, default_value_t = 1)]
        capture: usize,
        /// Seconds to wait before replaying.
        #[arg(long, default_value_t = 0)]
        replay_delay: u64,
        #[arg(long)]
        idle: Option<u64>,
    },
    /// Run a scenario file against the simulated channel.
    Scenario {
        file: PathBuf,
        /// Master key; a random one when omitted.
        #[arg(long)]
        key: Option<PathBuf>,
        #[command(flatten)]
        suite: SuiteArg,
    },
    /// Verify one envelope from many threads at once.
    Race {
        #[arg(long, default_value_t = 16)]
        parallelism: usize,
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        #[command(flatten)]
        suite: SuiteArg,
    },
}

#[derive(Args)]
struct SuiteArg {
    /// Suite name, e.g. TMAC-SHA256-UNIX-30.
    #[arg(long = "suite", env = "TMAC_SUITE", default_value = DEFAULT_SUITE)]
    name: String,
}

#[derive(Args)]
struct TimeArg {
    /// Use this Unix time instead of the system clock.
    #[arg(long)]
    at: Option<u64>,
}

fn run(cli: Cli) -> Result<u8, CliError> {
    use commands::*;
    match cli.command {
        Command::Keygen { out, bytes, force } => keygen(&out, bytes, force),
        Command::Sign { key, suite, input, identifier, output, time } => {
            sign(&key, &suite.name, input.as_deref(), &identifier, output.as_deref(), time.at)
        }
        Command::Verify { key, suite, input, state, window, assigned_ids, time } => verify(VerifyArgs {
            key: &key,
            suite: &suite.name,
            input: input.as_deref(),
            state: state.as_deref(),
            window,
            assigned_ids: assigned_ids.as_deref(),
            at: time.at,
        }),
        Command::AttackCost { bits, hashrate, probability } => attack_cost(bits, hashrate, probability),
        Command::AttackSim { key, suite, bits, runs, seed, corpus, time } => {
            attack_sim(key.as_deref(), &suite.name, bits, runs, seed, corpus, time.at)
        }
        Command::Demo(demo) => match demo {
            DemoCommand::Sender { key, suite, peer, bind, interval, messages } => {
                demo_sender(&key, &suite.name, &peer, &bind, interval, messages)
            }
            DemoCommand::Recipient { key, suite, listen, window, limit, idle } => {
                demo_recipient(&key, &suite.name, &listen, window, limit, idle)
            }
            DemoCommand::Adversary { listen, recipient, capture, replay_delay, idle } => {
                demo_adversary(&listen, &recipient, capture, replay_delay, idle)
            }
            DemoCommand::Scenario { file, key, suite } => demo_scenario(&file, key.as_deref(), &suite.name),
            DemoCommand::Race { parallelism, repeat, suite } => demo_race(parallelism, repeat, &suite.name),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}: {}", e.name(), e);
            ExitCode::from(e.exit_code())
        }
    }
}
