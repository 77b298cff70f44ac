#pragma once

#include <conjlab/conjugacy.hpp>
#include <conjlab/dynsys.hpp>
#include <conjlab/entropy.hpp>
#include <conjlab/errors.hpp>
#include <conjlab/grid.hpp>
#include <conjlab/json_io.hpp>
#include <conjlab/numeric.hpp>
#include <conjlab/series.hpp>
