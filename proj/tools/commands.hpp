#pragma once

// Subcommand front-end; returns the process exit code.
int run_cli(int argc, char** argv);
