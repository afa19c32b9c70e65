use std::io::Write;

fn main() {
    let stdin = std::io::stdin();
    let (mut stdout, mut stderr) = (std::io::stdout(), std::io::stderr());
    let mut io = icon_cli::app::Io {
        stdin: &mut stdin.lock(),
        stdout: &mut stdout,
        stderr: &mut stderr,
    };
    let code = icon_cli::app::run(std::env::args_os(), &mut io, &|k| std::env::var(k).ok());
    let _ = stdout.flush();
    std::process::exit(code);
}
