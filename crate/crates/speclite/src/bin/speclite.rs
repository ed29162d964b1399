fn main() {
    // Die quietly when the consumer closes the pipe (e.g. `| head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(speclite::cli::cli_main(std::env::args().skip(1)));
}
