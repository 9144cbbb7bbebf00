#pragma once

// Entry point of the `occkit` command-line tool. Returns the process exit
// code: 0 success, 1 usage error (including missing paths), 2 data error.
int cli_main(int argc, char** argv);
