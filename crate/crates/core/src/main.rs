fn main() {
    std::process::exit(tweet_triage::cli::dispatch(std::env::args_os()));
}
