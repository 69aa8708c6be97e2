// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/cli.hpp"

int main(int argc, char** argv) { return cdn::run_cli(argc, argv); }
