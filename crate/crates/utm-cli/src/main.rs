use std::io::Write;

fn main() {
    if let Ok(v) = std::env::var("UTM_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                // Fails only if a pool already exists, which cannot happen here.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                let e = utm_cli::error::CliError::Usage(format!("UTM_THREADS must be a positive integer, got '{v}'"));
                eprintln!("{}", e.to_json());
                std::process::exit(2);
            }
        }
    }
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    let code = utm_cli::execute(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    std::process::exit(code);
}
