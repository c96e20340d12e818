#pragma once

#include "cli.hpp"
