#pragma once

#include "gyrorotor/angular.hpp"
#include "gyrorotor/basis.hpp"
#include "gyrorotor/config.hpp"
#include "gyrorotor/constants.hpp"
#include "gyrorotor/dynamics.hpp"
#include "gyrorotor/errors.hpp"
#include "gyrorotor/explosion.hpp"
#include "gyrorotor/fitting.hpp"
#include "gyrorotor/io.hpp"
#include "gyrorotor/observables.hpp"
#include "gyrorotor/optimize.hpp"
#include "gyrorotor/pipeline.hpp"
#include "gyrorotor/preparation.hpp"
#include "gyrorotor/rotation.hpp"
#include "gyrorotor/spherical.hpp"
