#pragma once

#include "odt/adjoint.hpp"
#include "odt/calibrate.hpp"
#include "odt/common.hpp"
#include "odt/dataset.hpp"
#include "odt/fft.hpp"
#include "odt/field.hpp"
#include "odt/forward.hpp"
#include "odt/io.hpp"
#include "odt/optics.hpp"
#include "odt/reconstruct.hpp"
#include "odt/render.hpp"
#include "odt/rng.hpp"
#include "odt/simulate.hpp"
#include "odt/stitch.hpp"
#include "odt/system.hpp"
#include "odt/tv.hpp"
#include "odt/volume.hpp"
