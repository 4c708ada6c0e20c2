// SPDX-License-Identifier: Apache-2.0
#include "crnn/cli/app.hpp"

int main(int argc, char** argv) { return crnn::cli::run(argc, argv); }
