#pragma once

#define NVRTI_VERSION "0.1.0"
