use std::process::ExitCode;

fn main() -> ExitCode {
    coco_milp::cli::run()
}
