/**
 *  Copyright (c) 2026 by Contributors
 * @file error.cc
 */
#include "hfg/error.h"
