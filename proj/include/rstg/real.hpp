// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Precision switch. The engine is built once per precision; RSTG_DOUBLE
// selects 64-bit reals. Every precision-dependent symbol lives in an inline
// namespace named after the precision so that both builds can coexist.

#if defined(RSTG_DOUBLE) && RSTG_DOUBLE
#define RSTG_PRECISION_NS f64
#else
#define RSTG_PRECISION_NS f32
#endif

#define RSTG_NAMESPACE_BEGIN \
  namespace rstg {           \
  inline namespace RSTG_PRECISION_NS {
#define RSTG_NAMESPACE_END \
  }                        \
  }

RSTG_NAMESPACE_BEGIN

#if defined(RSTG_DOUBLE) && RSTG_DOUBLE
using real = double;
inline constexpr const char* kPrecisionName = "f64";
#else
using real = float;
inline constexpr const char* kPrecisionName = "f32";
#endif

RSTG_NAMESPACE_END
