#pragma once

#include "nlgpe/error.hpp"
#include "nlgpe/grid.hpp"
#include "nlgpe/kernel.hpp"
#include "nlgpe/expression.hpp"
#include "nlgpe/perron.hpp"
#include "nlgpe/matrix_field.hpp"
#include "nlgpe/control.hpp"
#include "nlgpe/spectral.hpp"
#include "nlgpe/model.hpp"
#include "nlgpe/dynamics.hpp"
#include "nlgpe/equilibrium.hpp"
#include "nlgpe/models.hpp"
