// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return decalforge::cli::run(argc, argv); }
