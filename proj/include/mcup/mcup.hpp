#pragma once

#include "error.hpp"
#include "grid.hpp"
#include "media.hpp"
#include "ordering.hpp"
#include "sparsela.hpp"
#include "fem.hpp"
#include "cells.hpp"
#include "effective.hpp"
#include "upscale.hpp"
#include "coarse.hpp"
#include "verify.hpp"
#include "spectral.hpp"
#include "pipeline.hpp"
#include "io.hpp"
#include "config.hpp"
