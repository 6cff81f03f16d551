//! `verify`: replay a chain dump through block validation.
//!
//! Output is one line per violation: `<height> <block_id> <Variant> <detail>`.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use interleave_core::dump::{read_dump, DumpError};
use interleave_core::{validate_block, ChainStore, StakeLedger};

use crate::output::ChainParams;
use crate::{CliError, VerifyArgs};

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_params(path: &Path) -> Result<(ChainParams, StakeLedger), CliError> {
    let cp: ChainParams = serde_json::from_reader(open(path)?).map_err(|e| {
        CliError::Usage(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    cp.params
        .validate()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut ledger = StakeLedger::new(cp.params.unlock_delay);
    for (id, &stake) in &cp.stakes {
        if stake > 0 {
            ledger.credit(id, stake);
            ledger.lock(id, stake, 0).expect("credited above");
        }
    }
    Ok((cp, ledger))
}

/// Returns the violation lines in file order.
pub fn verify_dump(dump: &Path, params: &Path) -> Result<Vec<String>, CliError> {
    let (cp, ledger) = read_params(params)?;
    let records = read_dump(open(dump)?).map_err(|e| match e {
        DumpError::Parse { line, source } => {
            CliError::Usage(format!("{}:{line}: {source}", dump.display()))
        }
        DumpError::Io(e) => CliError::Runtime(format!("{}: {e}", dump.display())),
    })?;

    let genesis = cp.params.genesis_block();
    let mut store =
        ChainStore::new(genesis).map_err(|e| CliError::Runtime(format!("genesis: {e}")))?;
    let genesis_id = store.genesis_id();
    let mut violations = Vec::new();
    let mut report = |height: u64, id: &str, variant: &str, detail: String| {
        violations.push(format!("{height} {id} {variant} {detail}"));
    };

    for (line, rec) in records {
        let id_hex = rec.id.to_hex();
        let block = match rec.to_block() {
            Ok(b) => b,
            Err(e) => {
                report(
                    rec.height,
                    &id_hex,
                    "StructuralError",
                    format!("line {line}: {e}"),
                );
                continue;
            }
        };
        if rec.height == 0 {
            if rec.id != genesis_id {
                report(
                    0,
                    &id_hex,
                    "StructuralError",
                    format!("genesis does not match parameters (expected {genesis_id})"),
                );
            }
            continue;
        }
        match block.id() {
            Ok(computed) if computed == rec.id => {}
            Ok(computed) => {
                report(
                    rec.height,
                    &id_hex,
                    "StructuralError",
                    format!("recorded id differs from block hash {computed}"),
                );
                continue;
            }
            Err(e) => {
                report(rec.height, &id_hex, "StructuralError", e.to_string());
                continue;
            }
        }
        if let Err(e) = validate_block(&block, &store, &ledger, block.timestamp, &cp.params) {
            report(rec.height, &id_hex, e.variant_name(), e.to_string());
        }
        // keep invalid blocks too, so their descendants are still checked
        if store.get(&rec.id).is_none() {
            let _ = store.insert_unchecked(block);
        }
    }
    Ok(violations)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let violations = verify_dump(&args.chain_dump, &args.params_file)?;
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violations(violations.len()))
    }
}
