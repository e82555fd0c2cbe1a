use ltcse::cli::{run_cli, Env};
use ltcse::data::HttpDownloader;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    let mut env = Env {
        downloader: &HttpDownloader,
        out: &mut out,
        err: &mut err,
    };
    let code = run_cli(std::env::args_os(), &mut env);
    std::process::exit(code);
}
