#pragma once

// Everything except the HTTP service (strata/service.hpp).

#include "strata/antialias.hpp"
#include "strata/cache.hpp"
#include "strata/coherence.hpp"
#include "strata/filters.hpp"
#include "strata/geometry.hpp"
#include "strata/pixelset.hpp"
#include "strata/raster.hpp"
#include "strata/renderer.hpp"
#include "strata/report.hpp"
#include "strata/scene.hpp"
#include "strata/scene_io.hpp"
#include "strata/sprite.hpp"
#include "strata/vec.hpp"
